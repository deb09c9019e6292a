"""Network architectures behind the patch classifier.

All networks end in a single output unit; the sigmoid lives at the scoring
boundary (training uses the logit for numerical stability). Batch
normalization is off by default for every architecture and can be switched on
via ModelConfig.batch_norm.

COMPACT_REF is the desk-scale reference CNN: small enough to train on a CPU in
seconds from random initialization, used to exercise the full pipeline without
pretrained weights. VGG16_CLASS / INCEPTION_V4_CLASS are the full-scale paths.
"""

from __future__ import annotations

from pathlib import Path

import torch
import torch.nn as nn
import torchvision

from .config import Architecture, ModelConfig


class ConvUnit(nn.Module):
    """Conv2d + optional BatchNorm + ReLU."""

    def __init__(self, cin, cout, kernel, stride=1, padding=0, batch_norm=False):
        super().__init__()
        self.conv = nn.Conv2d(cin, cout, kernel, stride=stride, padding=padding,
                              bias=not batch_norm)
        self.bn = nn.BatchNorm2d(cout) if batch_norm else None
        self.act = nn.ReLU(inplace=True)

    def forward(self, x):
        x = self.conv(x)
        if self.bn is not None:
            x = self.bn(x)
        return self.act(x)


class CompactRefNet(nn.Module):
    """A few conv/pool blocks and a small dense head; 64x64 RGB input."""

    def __init__(self, batch_norm: bool = False):
        super().__init__()
        self.features = nn.Sequential(
            ConvUnit(3, 16, 3, padding=1, batch_norm=batch_norm),
            nn.MaxPool2d(2),
            ConvUnit(16, 32, 3, padding=1, batch_norm=batch_norm),
            nn.MaxPool2d(2),
            ConvUnit(32, 64, 3, padding=1, batch_norm=batch_norm),
            nn.MaxPool2d(2),
        )
        self.head = nn.Sequential(
            nn.Flatten(),
            nn.Linear(64 * 8 * 8, 64),
            nn.ReLU(inplace=True),
            nn.Linear(64, 1),
        )

    def forward(self, x):
        return self.head(self.features(x)).squeeze(1)


class Vgg16Class(nn.Module):
    """VGG 16-layer feature extractor with a single-logit classification head."""

    def __init__(self, batch_norm: bool = False):
        super().__init__()
        base = (torchvision.models.vgg16_bn if batch_norm else torchvision.models.vgg16)(
            weights=None
        )
        base.classifier[6] = nn.Linear(4096, 1)
        self.base = base

    def forward(self, x):
        return self.base(x).squeeze(1)


class _InceptionA(nn.Module):
    def __init__(self, bn):
        super().__init__()
        self.b0 = ConvUnit(384, 96, 1, batch_norm=bn)
        self.b1 = nn.Sequential(
            ConvUnit(384, 64, 1, batch_norm=bn),
            ConvUnit(64, 96, 3, padding=1, batch_norm=bn),
        )
        self.b2 = nn.Sequential(
            ConvUnit(384, 64, 1, batch_norm=bn),
            ConvUnit(64, 96, 3, padding=1, batch_norm=bn),
            ConvUnit(96, 96, 3, padding=1, batch_norm=bn),
        )
        self.b3 = nn.Sequential(
            nn.AvgPool2d(3, stride=1, padding=1, count_include_pad=False),
            ConvUnit(384, 96, 1, batch_norm=bn),
        )

    def forward(self, x):
        return torch.cat([self.b0(x), self.b1(x), self.b2(x), self.b3(x)], dim=1)


class _ReductionA(nn.Module):
    def __init__(self, bn):
        super().__init__()
        self.b0 = ConvUnit(384, 384, 3, stride=2, batch_norm=bn)
        self.b1 = nn.Sequential(
            ConvUnit(384, 192, 1, batch_norm=bn),
            ConvUnit(192, 224, 3, padding=1, batch_norm=bn),
            ConvUnit(224, 256, 3, stride=2, batch_norm=bn),
        )
        self.b2 = nn.MaxPool2d(3, stride=2)

    def forward(self, x):
        return torch.cat([self.b0(x), self.b1(x), self.b2(x)], dim=1)


class _InceptionB(nn.Module):
    def __init__(self, bn):
        super().__init__()
        self.b0 = ConvUnit(1024, 384, 1, batch_norm=bn)
        self.b1 = nn.Sequential(
            ConvUnit(1024, 192, 1, batch_norm=bn),
            ConvUnit(192, 224, (1, 7), padding=(0, 3), batch_norm=bn),
            ConvUnit(224, 256, (7, 1), padding=(3, 0), batch_norm=bn),
        )
        self.b2 = nn.Sequential(
            ConvUnit(1024, 192, 1, batch_norm=bn),
            ConvUnit(192, 192, (7, 1), padding=(3, 0), batch_norm=bn),
            ConvUnit(192, 224, (1, 7), padding=(0, 3), batch_norm=bn),
            ConvUnit(224, 224, (7, 1), padding=(3, 0), batch_norm=bn),
            ConvUnit(224, 256, (1, 7), padding=(0, 3), batch_norm=bn),
        )
        self.b3 = nn.Sequential(
            nn.AvgPool2d(3, stride=1, padding=1, count_include_pad=False),
            ConvUnit(1024, 128, 1, batch_norm=bn),
        )

    def forward(self, x):
        return torch.cat([self.b0(x), self.b1(x), self.b2(x), self.b3(x)], dim=1)


class _ReductionB(nn.Module):
    def __init__(self, bn):
        super().__init__()
        self.b0 = nn.Sequential(
            ConvUnit(1024, 192, 1, batch_norm=bn),
            ConvUnit(192, 192, 3, stride=2, batch_norm=bn),
        )
        self.b1 = nn.Sequential(
            ConvUnit(1024, 256, 1, batch_norm=bn),
            ConvUnit(256, 256, (1, 7), padding=(0, 3), batch_norm=bn),
            ConvUnit(256, 320, (7, 1), padding=(3, 0), batch_norm=bn),
            ConvUnit(320, 320, 3, stride=2, batch_norm=bn),
        )
        self.b2 = nn.MaxPool2d(3, stride=2)

    def forward(self, x):
        return torch.cat([self.b0(x), self.b1(x), self.b2(x)], dim=1)


class _InceptionC(nn.Module):
    def __init__(self, bn):
        super().__init__()
        self.b0 = ConvUnit(1536, 256, 1, batch_norm=bn)
        self.b1_stem = ConvUnit(1536, 384, 1, batch_norm=bn)
        self.b1_a = ConvUnit(384, 256, (1, 3), padding=(0, 1), batch_norm=bn)
        self.b1_b = ConvUnit(384, 256, (3, 1), padding=(1, 0), batch_norm=bn)
        self.b2_stem = nn.Sequential(
            ConvUnit(1536, 384, 1, batch_norm=bn),
            ConvUnit(384, 448, (3, 1), padding=(1, 0), batch_norm=bn),
            ConvUnit(448, 512, (1, 3), padding=(0, 1), batch_norm=bn),
        )
        self.b2_a = ConvUnit(512, 256, (1, 3), padding=(0, 1), batch_norm=bn)
        self.b2_b = ConvUnit(512, 256, (3, 1), padding=(1, 0), batch_norm=bn)
        self.b3 = nn.Sequential(
            nn.AvgPool2d(3, stride=1, padding=1, count_include_pad=False),
            ConvUnit(1536, 256, 1, batch_norm=bn),
        )

    def forward(self, x):
        s1 = self.b1_stem(x)
        s2 = self.b2_stem(x)
        return torch.cat(
            [self.b0(x), self.b1_a(s1), self.b1_b(s1), self.b2_a(s2), self.b2_b(s2), self.b3(x)],
            dim=1,
        )


class InceptionV4Class(nn.Module):
    """Inception-V4-style network with a single-logit head; 299x299 RGB input."""

    def __init__(self, batch_norm: bool = False):
        super().__init__()
        bn = batch_norm
        self.stem_seq = nn.Sequential(
            ConvUnit(3, 32, 3, stride=2, batch_norm=bn),
            ConvUnit(32, 32, 3, batch_norm=bn),
            ConvUnit(32, 64, 3, padding=1, batch_norm=bn),
        )
        self.mixed3a_pool = nn.MaxPool2d(3, stride=2)
        self.mixed3a_conv = ConvUnit(64, 96, 3, stride=2, batch_norm=bn)
        self.mixed4a_b0 = nn.Sequential(
            ConvUnit(160, 64, 1, batch_norm=bn),
            ConvUnit(64, 96, 3, batch_norm=bn),
        )
        self.mixed4a_b1 = nn.Sequential(
            ConvUnit(160, 64, 1, batch_norm=bn),
            ConvUnit(64, 64, (1, 7), padding=(0, 3), batch_norm=bn),
            ConvUnit(64, 64, (7, 1), padding=(3, 0), batch_norm=bn),
            ConvUnit(64, 96, 3, batch_norm=bn),
        )
        self.mixed5a_conv = ConvUnit(192, 192, 3, stride=2, batch_norm=bn)
        self.mixed5a_pool = nn.MaxPool2d(3, stride=2)
        self.blocks = nn.Sequential(
            *[_InceptionA(bn) for _ in range(4)],
            _ReductionA(bn),
            *[_InceptionB(bn) for _ in range(7)],
            _ReductionB(bn),
            *[_InceptionC(bn) for _ in range(3)],
        )
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.dropout = nn.Dropout(0.2)
        self.fc = nn.Linear(1536, 1)

    def forward(self, x):
        x = self.stem_seq(x)
        x = torch.cat([self.mixed3a_pool(x), self.mixed3a_conv(x)], dim=1)
        x = torch.cat([self.mixed4a_b0(x), self.mixed4a_b1(x)], dim=1)
        x = torch.cat([self.mixed5a_conv(x), self.mixed5a_pool(x)], dim=1)
        x = self.blocks(x)
        x = self.pool(x).flatten(1)
        x = self.dropout(x)
        return self.fc(x).squeeze(1)


_BUILDERS = {
    Architecture.COMPACT_REF: CompactRefNet,
    Architecture.VGG16_CLASS: Vgg16Class,
    Architecture.INCEPTION_V4_CLASS: InceptionV4Class,
}


def build_network(config: ModelConfig) -> nn.Module:
    """Instantiate the configured architecture, loading pretrained weights if set."""
    net = _BUILDERS[config.architecture](batch_norm=config.batch_norm)
    if config.pretrained_weights:
        path = Path(config.pretrained_weights)
        state = torch.load(path, map_location="cpu", weights_only=True)
        net.load_state_dict(state)
    return net
