"""Patch classifier: sklearn-style estimator around a torch CNN, the
manifest-level training entry point, batch scoring, and checkpoint IO."""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Callable, Sequence

import cv2
import numpy as np
import torch
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ..errors import SingleClassError, TrainingDivergedError, UnreadableSourceError
from ..manifests import AnnotationManifest, Label
from ..validation import check_binary_labels, check_rgb_pixels
from .augment import augment, resize_pixels
from .config import AugmentationConfig, ModelConfig
from .networks import build_network

PatchLoader = Callable[["PatchRecord"], np.ndarray]  # noqa: F821 - record duck-typed


class FilePatchLoader:
    """Load a record's pixels from its patch_uri (optionally under a root dir)."""

    def __init__(self, root: str | Path | None = None):
        self.root = Path(root) if root is not None else None

    def __call__(self, record) -> np.ndarray:
        path = Path(record.patch_uri)
        if self.root is not None and not path.is_absolute():
            path = self.root / path
        raw = cv2.imread(str(path), cv2.IMREAD_COLOR)
        if raw is None:
            raise UnreadableSourceError(f"could not read patch {path}")
        return cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)


def _as_patch_list(X) -> list[np.ndarray]:
    if isinstance(X, np.ndarray) and X.ndim == 4:
        return [check_rgb_pixels(X[i]) for i in range(X.shape[0])]
    return [check_rgb_pixels(p) for p in X]


class TilPatchClassifier(BaseEstimator, ClassifierMixin):
    """Binary patch classifier with a sigmoid probability output.

    Trains the configured CNN with Adam on binary cross-entropy. Follows the
    sklearn estimator conventions (get_params/set_params, fitted attributes
    with trailing underscores) so it composes with pipelines and model
    selection utilities; ``score_patches`` is the pipeline-facing scoring
    surface (accepts raw patches of any size and resizes internally).
    """

    def __init__(
        self,
        config: ModelConfig | None = None,
        augmentation: AugmentationConfig | None = None,
    ):
        self.config = config
        self.augmentation = augmentation

    # -- sklearn surface ---------------------------------------------------

    def fit(self, X, y, X_val=None, y_val=None):
        """Train on patches X (iterable of HxWx3 uint8) and binary labels y.

        With a validation set, keeps the weights of the step with the best
        validation AUC (evaluated at epoch boundaries and at the final step);
        otherwise keeps the final weights. Label counts of every completed
        epoch are recorded in ``training_log_`` so minority-class examples are
        auditable: no example is ever silently dropped.
        """
        cfg = self.config if self.config is not None else ModelConfig()
        aug = self.augmentation if self.augmentation is not None else AugmentationConfig()
        patches = _as_patch_list(X)
        labels = check_binary_labels(y, n=len(patches))
        if labels.min() == labels.max():
            raise SingleClassError(
                "training requires at least one example of each label"
            )

        torch.manual_seed(cfg.rng_seed)
        net = build_network(cfg)
        optimizer = torch.optim.Adam(
            net.parameters(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay
        )
        loss_fn = torch.nn.BCEWithLogitsLoss()
        data_rng = np.random.default_rng(aug.rng_seed)

        pos_idx = np.flatnonzero(labels == 1)
        neg_idx = np.flatnonzero(labels == 0)

        def epoch_order() -> np.ndarray:
            if cfg.oversample_positives and len(pos_idx) < len(neg_idx):
                reps = max(1, round(len(neg_idx) / len(pos_idx)))
                pool = np.concatenate([neg_idx] + [pos_idx] * reps)
            else:
                pool = np.arange(len(patches))
            return data_rng.permutation(pool)

        self.config_ = cfg
        self.augmentation_ = aug
        self.classes_ = np.array([0, 1])
        self.net_ = net
        self.training_log_ = []
        self.model_id_ = f"{cfg.architecture.value.lower()}-s{cfg.rng_seed}"
        self.training_manifest_name_ = ""

        best_state = None
        best_val_auc = -1.0
        has_val = X_val is not None and y_val is not None
        if has_val:
            val_patches = _as_patch_list(X_val)
            val_labels = check_binary_labels(y_val, n=len(val_patches))

        def eval_val() -> float:
            from ..calibration import ScoredSet, auc_score

            scores = self.score_patches(val_patches)
            return auc_score(ScoredSet(scores=scores, labels=val_labels))

        order = epoch_order()
        ptr = 0
        epoch = 0
        epoch_pos = epoch_neg = 0
        net.train()
        for step in range(1, cfg.max_steps + 1):
            if ptr >= len(order):
                self.training_log_.append(
                    {"epoch": epoch, "epoch_summary": True,
                     "n_pos": epoch_pos, "n_neg": epoch_neg}
                )
                if has_val:
                    val_auc = eval_val()
                    net.train()
                    if val_auc > best_val_auc:
                        best_val_auc = val_auc
                        best_state = copy.deepcopy(net.state_dict())
                order = epoch_order()
                ptr = 0
                epoch += 1
                epoch_pos = epoch_neg = 0
            batch_idx = order[ptr : ptr + cfg.batch_size]
            ptr += len(batch_idx)

            batch = np.stack(
                [
                    resize_pixels(augment(patches[i], aug, data_rng), cfg.input_size_px)
                    for i in batch_idx
                ]
            ).astype(np.float32) / 255.0
            xb = torch.from_numpy(batch).permute(0, 3, 1, 2)
            yb = torch.from_numpy(labels[batch_idx].astype(np.float32))

            optimizer.zero_grad()
            logits = net(xb)
            loss = loss_fn(logits, yb)
            loss_value = float(loss.detach())
            if not np.isfinite(loss_value):
                raise TrainingDivergedError(
                    f"non-finite loss {loss_value} at step {step} "
                    f"(lr={cfg.learning_rate}, batch={len(batch_idx)})"
                )
            loss.backward()
            optimizer.step()

            n_pos = int(labels[batch_idx].sum())
            epoch_pos += n_pos
            epoch_neg += len(batch_idx) - n_pos
            self.training_log_.append(
                {"step": step, "epoch": epoch, "loss": loss_value,
                 "n_pos": n_pos, "n_neg": len(batch_idx) - n_pos}
            )

        if ptr >= len(order):  # training ended exactly on an epoch boundary
            self.training_log_.append(
                {"epoch": epoch, "epoch_summary": True,
                 "n_pos": epoch_pos, "n_neg": epoch_neg}
            )
        if has_val:
            val_auc = eval_val()
            if val_auc > best_val_auc:
                best_val_auc = val_auc
                best_state = copy.deepcopy(net.state_dict())
            if best_state is not None:
                net.load_state_dict(best_state)
            self.best_val_auc_ = best_val_auc
        net.eval()
        return self

    def predict_proba(self, X) -> np.ndarray:
        p = self.score_patches(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.score_patches(X) >= 0.5).astype(np.int64)

    # -- scoring -----------------------------------------------------------

    def score_patches(
        self, patches: Sequence[np.ndarray] | np.ndarray, batch_size: int | None = None
    ) -> np.ndarray:
        """Positive-class probability per patch, order-preserving.

        Patches are resized to the model's input size as needed. Scoring in
        eval mode is deterministic for fixed weights and batching; scores
        across different batchings agree to ~1e-7 (float32 accumulation).
        Empty input yields an empty array.
        """
        self._check_fitted()
        items = _as_patch_list(patches)
        if not items:
            return np.array([], dtype=np.float64)
        size = self.config_.input_size_px
        chunk = batch_size or self.config_.batch_size
        self.net_.eval()
        out = []
        with torch.no_grad():
            for start in range(0, len(items), chunk):
                block = np.stack(
                    [resize_pixels(p, size) for p in items[start : start + chunk]]
                ).astype(np.float32) / 255.0
                xb = torch.from_numpy(block).permute(0, 3, 1, 2)
                out.append(torch.sigmoid(self.net_(xb)).numpy().astype(np.float64))
        return np.concatenate(out)

    def score(self, patch_pixels: np.ndarray) -> float:
        """Probability that one patch is TIL positive."""
        return float(self.score_patches([patch_pixels])[0])

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise NotFittedError("TilPatchClassifier must be fitted or loaded first")


def predict_batch(model: TilPatchClassifier, patches) -> np.ndarray:
    """Score a batch of patches; one probability in [0, 1] per patch."""
    return model.score_patches(patches)


def load_manifest_patches(
    manifest: AnnotationManifest, patch_loader: PatchLoader | None = None
) -> tuple[list[np.ndarray], np.ndarray]:
    """Materialize a manifest's pixels and 0/1 labels (desk-scale, in memory)."""
    loader = patch_loader or FilePatchLoader()
    pixels = [loader(r) for r in manifest.records]
    labels = np.array(
        [1 if r.label is Label.TIL_POSITIVE else 0 for r in manifest.records],
        dtype=np.int64,
    )
    return pixels, labels


def train(
    config: ModelConfig,
    aug: AugmentationConfig,
    manifest: AnnotationManifest,
    *,
    patch_loader: PatchLoader | None = None,
    val_manifest: AnnotationManifest | None = None,
) -> TilPatchClassifier:
    """Train a classifier from an annotation manifest (pixels read per patch_uri)."""
    X, y = load_manifest_patches(manifest, patch_loader)
    clf = TilPatchClassifier(config=config, augmentation=aug)
    if val_manifest is not None:
        X_val, y_val = load_manifest_patches(val_manifest, patch_loader)
        clf.fit(X, y, X_val=X_val, y_val=y_val)
    else:
        clf.fit(X, y)
    clf.training_manifest_name_ = manifest.name
    return clf


def save_checkpoint(clf: TilPatchClassifier, ckpt_dir: str | Path) -> Path:
    """Write weights blob, config.json, and training_log.jsonl to a directory."""
    clf._check_fitted()
    ckpt_dir = Path(ckpt_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    torch.save(clf.net_.state_dict(), ckpt_dir / "weights.pt")
    meta = {
        "model": clf.config_.to_dict(),
        "augmentation": clf.augmentation_.to_dict(),
        "model_id": clf.model_id_,
        "training_manifest": clf.training_manifest_name_,
    }
    (ckpt_dir / "config.json").write_text(json.dumps(meta, indent=2) + "\n")
    with (ckpt_dir / "training_log.jsonl").open("w") as fh:
        for row in clf.training_log_:
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")
    return ckpt_dir


def load_checkpoint(ckpt_dir: str | Path) -> TilPatchClassifier:
    """Load a checkpoint directory back into a ready-to-score classifier."""
    ckpt_dir = Path(ckpt_dir)
    meta = json.loads((ckpt_dir / "config.json").read_text())
    cfg = ModelConfig.from_dict(meta["model"])
    aug = AugmentationConfig.from_dict(meta["augmentation"])
    clf = TilPatchClassifier(config=cfg, augmentation=aug)
    net = build_network(cfg)
    state = torch.load(ckpt_dir / "weights.pt", map_location="cpu", weights_only=True)
    net.load_state_dict(state)
    net.eval()
    clf.config_ = cfg
    clf.augmentation_ = aug
    clf.classes_ = np.array([0, 1])
    clf.net_ = net
    clf.model_id_ = meta.get("model_id", f"{cfg.architecture.value.lower()}-s{cfg.rng_seed}")
    clf.training_manifest_name_ = meta.get("training_manifest", "")
    log_path = ckpt_dir / "training_log.jsonl"
    clf.training_log_ = (
        [json.loads(line) for line in log_path.read_text().splitlines() if line]
        if log_path.exists()
        else []
    )
    return clf
