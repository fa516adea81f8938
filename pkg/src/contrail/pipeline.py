"""End-to-end pipeline: staged execution with content-hash-gated reruns,
a JSON manifest per output directory, and report emission.

Stages run in a fixed order (``ingest`` through ``report``); each writes
versioned artifacts under the configured output directory plus a manifest
entry recording the input hash, stage seed, and output hashes. Re-running
a stage whose inputs have not changed is a no-op.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import analytics, embeddings, hawkes
from .claims import Claim, LabelStore, load_claims
from .corpus import Document, DocumentStore
from .features import FeatureVector, WordVectors, extract_features
from .claims import CandidateQuery, candidate_queries
from .ltr import (
    Hyperparams,
    RankerModel,
    RankingDataset,
    assemble,
    cross_validate,
    train,
    write_letor,
)

MANIFEST_FORMAT = "contrail-manifest"
MANIFEST_VERSION = 1

STAGES = [
    "ingest",
    "candidates",
    "featurize",
    "train",
    "cv",
    "extract",
    "embed",
    "similarity",
    "hawkes",
    "analyze",
    "report",
]

PREREQS: dict[str, list[str]] = {
    "ingest": [],
    "candidates": ["ingest"],
    "featurize": ["ingest", "candidates"],
    "train": ["featurize"],
    "cv": ["featurize"],
    "extract": ["train"],
    "embed": ["extract"],
    "similarity": ["embed"],
    "hawkes": ["extract"],
    "analyze": ["extract"],
    "report": ["similarity", "hawkes", "analyze"],
}


class PipelineError(RuntimeError):
    """User-actionable pipeline failure (missing stage, bad config)."""


@dataclass
class PipelineConfig:
    claims_path: str
    labels_path: str
    output_dir: str
    dumps: list[dict] = field(default_factory=list)  # {"path","format"}
    vectors_path: Optional[str] = None
    communities: list[str] = field(default_factory=list)
    baseline_communities: list[str] = field(default_factory=list)
    reddit_match_fields: str = "title_body"
    candidate_mode: str = "combinations"
    candidate_cap: int = 50
    wmd_method: str = "auto"
    spanning_fractions: tuple[float, float, float] = (0.2, 0.2, 0.1)
    ltr: dict = field(default_factory=dict)
    ltr_grid: dict = field(default_factory=dict)  # hyperparam -> value list
    cv_folds: int = 5
    embedding: dict = field(default_factory=dict)
    hawkes: dict = field(default_factory=dict)
    toxicity: dict = field(default_factory=dict)
    topics: list[str] = field(default_factory=list)
    seed: int = 0

    @classmethod
    def load(cls, path: str | Path, seed_override: Optional[int] = None) -> "PipelineConfig":
        path = Path(path)
        raw = json.loads(path.read_text())
        base = path.parent
        cfg = cls(**raw)
        cfg.claims_path = str((base / cfg.claims_path).resolve())
        cfg.labels_path = str((base / cfg.labels_path).resolve())
        cfg.output_dir = str((base / cfg.output_dir).resolve())
        cfg.dumps = [{**d, "path": str((base / d["path"]).resolve())} for d in cfg.dumps]
        if cfg.vectors_path:
            cfg.vectors_path = str((base / cfg.vectors_path).resolve())
        if seed_override is not None:
            cfg.seed = seed_override
        cfg.spanning_fractions = tuple(cfg.spanning_fractions)  # type: ignore[assignment]
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not Path(self.claims_path).exists():
            raise PipelineError(f"claims file not found: {self.claims_path}")
        for dump in self.dumps:
            if not Path(dump["path"]).exists():
                raise PipelineError(f"dump file not found: {dump['path']}")
            if dump.get("format") not in ("reddit_jsonl", "twitter_jsonl"):
                raise PipelineError(f"unknown dump format: {dump.get('format')!r}")
        if self.vectors_path and not Path(self.vectors_path).exists():
            raise PipelineError(f"vectors file not found: {self.vectors_path}")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["spanning_fractions"] = list(self.spanning_fractions)
        return d


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _stable_seed(*parts) -> int:
    key = ":".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:4], "big")


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out_dir = Path(config.output_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.out_dir / "manifest.json"
        self.manifest = self._load_manifest()
        self._store_cache: Optional[DocumentStore] = None

    # Manifest bookkeeping

    def _load_manifest(self) -> dict:
        if self.manifest_path.exists():
            doc = json.loads(self.manifest_path.read_text())
            if doc.get("format") != MANIFEST_FORMAT:
                raise PipelineError(f"unrecognized manifest at {self.manifest_path}")
            return doc
        return {"format": MANIFEST_FORMAT, "version": MANIFEST_VERSION, "stages": {}}

    def _save_manifest(self) -> None:
        _write_json(self.manifest_path, self.manifest)

    def out(self, *parts: str) -> Path:
        return self.out_dir.joinpath(*parts)

    def stage_seed(self, stage: str) -> int:
        return _stable_seed(self.config.seed, stage)

    def _external_inputs(self, stage: str) -> list[Path]:
        cfg = self.config
        inputs: list[Path] = []
        if stage == "ingest":
            inputs += [Path(d["path"]) for d in cfg.dumps]
        if stage in ("candidates", "featurize", "extract", "embed", "hawkes", "report"):
            inputs.append(Path(cfg.claims_path))
        if stage in ("featurize", "train", "cv"):
            inputs.append(Path(cfg.labels_path))
        if stage == "featurize" and cfg.vectors_path:
            inputs.append(Path(cfg.vectors_path))
        return inputs

    def _inputs_hash(self, stage: str) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(self.config.as_dict(), sort_keys=True).encode())
        h.update(str(self.stage_seed(stage)).encode())
        for path in self._external_inputs(stage):
            h.update(path.name.encode())
            h.update(_sha256_file(path).encode() if path.exists() else b"<missing>")
        for prereq in PREREQS[stage]:
            entry = self.manifest["stages"].get(prereq)
            if entry is None:
                raise PipelineError(f"stage {stage!r} requires {prereq!r}; run stage '{prereq}' first")
            h.update(prereq.encode())
            h.update(json.dumps(entry["outputs"], sort_keys=True).encode())
        return h.hexdigest()

    def _outputs_fresh(self, entry: dict) -> bool:
        for rel, digest in entry["outputs"].items():
            path = self.out(rel)
            if not path.exists() or _sha256_file(path) != digest:
                return False
        return True

    def run(self, stage: str, force: bool = False) -> dict:
        """Run one stage (or "all"); returns its manifest entry."""
        if stage == "all":
            return self.run_all(force=force)
        if stage not in STAGES:
            raise PipelineError(f"unknown stage {stage!r}; expected one of {STAGES + ['all']}")
        inputs_hash = self._inputs_hash(stage)
        entry = self.manifest["stages"].get(stage)
        if not force and entry and entry["inputs_hash"] == inputs_hash and self._outputs_fresh(entry):
            return entry

        started = time.monotonic()
        outputs = getattr(self, f"_stage_{stage}")()
        entry = {
            "inputs_hash": inputs_hash,
            "seed": self.stage_seed(stage),
            "duration_s": round(time.monotonic() - started, 3),
            "outputs": {rel: _sha256_file(self.out(rel)) for rel in sorted(outputs)},
        }
        self.manifest["stages"][stage] = entry
        self._save_manifest()
        return entry

    def run_all(self, force: bool = False) -> dict:
        for stage in STAGES:
            self.run(stage, force=force)
        return self.manifest

    # Shared artifact loading

    def store(self) -> DocumentStore:
        if self._store_cache is None:
            path = self.out("store.jsonl")
            if not path.exists():
                raise PipelineError("store artifact missing; run stage 'ingest' first")
            self._store_cache = DocumentStore.load(path)
        return self._store_cache

    def claims(self) -> list[Claim]:
        return load_claims(self.config.claims_path)

    def labels(self) -> LabelStore:
        if not Path(self.config.labels_path).exists():
            raise PipelineError(
                f"labels file not found: {self.config.labels_path}; annotate claims first (contrail serve)"
            )
        return LabelStore(self.config.labels_path)

    def vectors(self) -> WordVectors:
        path = self.out("vectors.txt")
        if not path.exists():
            raise PipelineError("vectors artifact missing; run stage 'featurize' first")
        return WordVectors.load(path)

    def model(self) -> RankerModel:
        path = self.out("model.json")
        if not path.exists():
            raise PipelineError("model artifact missing; run stage 'train' first")
        return RankerModel.load(path)

    def candidates_by_claim(self) -> dict[str, list[CandidateQuery]]:
        path = self.out("candidates.jsonl")
        if not path.exists():
            raise PipelineError("candidates artifact missing; run stage 'candidates' first")
        out: dict[str, list[CandidateQuery]] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                rec = json.loads(line)
                cand = CandidateQuery(rec["claim_id"], tuple(rec["terms"]), rec["source"])
                out.setdefault(cand.claim_id, []).append(cand)
        return out

    def features_table(self) -> dict[tuple[str, frozenset[str]], FeatureVector]:
        path = self.out("features.jsonl")
        if not path.exists():
            raise PipelineError("features artifact missing; run stage 'featurize' first")
        table: dict[tuple[str, frozenset[str]], FeatureVector] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                rec = json.loads(line)
                table[(rec["claim_id"], frozenset(rec["terms"]))] = FeatureVector.from_array(rec["features"])
        return table

    def extraction(self) -> dict:
        path = self.out("extraction.json")
        if not path.exists():
            raise PipelineError("extraction artifact missing; run stage 'extract' first")
        return json.loads(path.read_text())

    def _extracted_docs(self, claim_id: str) -> list[Document]:
        store = self.store()
        docs = []
        for community, keys in self.extraction()[claim_id]["hits"].items():
            for platform, doc_id in keys:
                doc = store.get(platform, doc_id)
                if doc is not None:
                    docs.append(doc)
        docs.sort(key=lambda d: (d.timestamp, d.id))
        return docs

    # Stages

    def _stage_ingest(self) -> list[str]:
        store = DocumentStore()
        report = None
        for dump in self.config.dumps:
            r = store.ingest(dump["path"], dump["format"], self.config.reddit_match_fields)
            report = r if report is None else report.merge(r)
        store.seal()
        store.save(self.out("store.jsonl"))
        payload = {
            "accepted": report.accepted if report else 0,
            "rejected": report.rejected if report else 0,
            "duplicates": report.duplicates if report else 0,
            "per_community": dict(sorted(report.per_community.items())) if report else {},
            "per_kind": dict(sorted(report.per_kind.items())) if report else {},
        }
        _write_json(self.out("ingest_report.json"), payload)
        self._store_cache = store
        return ["store.jsonl", "ingest_report.json"]

    def _stage_candidates(self) -> list[str]:
        store = self.store()
        path = self.out("candidates.jsonl")
        with open(path, "w", encoding="utf-8") as fh:
            for claim in self.claims():
                for cand in candidate_queries(
                    claim, mode=self.config.candidate_mode, cap=self.config.candidate_cap, store=store
                ):
                    rec = {"claim_id": cand.claim_id, "terms": list(cand.terms), "source": cand.source}
                    fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
        return ["candidates.jsonl"]

    def _stage_featurize(self) -> list[str]:
        store = self.store()
        seed = self.stage_seed("featurize")
        if self.config.vectors_path:
            shutil.copyfile(self.config.vectors_path, self.out("vectors.txt"))
        else:
            params = embeddings.SkipgramParams(
                **{**{"dim": 50, "epochs": 5, "min_count": 5}, **self.config.embedding.get("fallback", {})}
            )
            model = embeddings.train_skipgram(store.documents(), params, seed=seed, community="<corpus>")
            model.as_word_vectors().save(self.out("vectors.txt"))
        vectors = WordVectors.load(self.out("vectors.txt"))

        label_sets: dict[str, set[frozenset[str]]] = {}
        if Path(self.config.labels_path).exists():
            for label in LabelStore(self.config.labels_path).all():
                label_sets.setdefault(label.claim_id, set()).add(frozenset(label.terms))

        cands = self.candidates_by_claim()
        path = self.out("features.jsonl")
        with open(path, "w", encoding="utf-8") as fh:
            for claim in self.claims():
                todo = list(cands.get(claim.id, []))
                present = {c.term_set() for c in todo}
                for terms in sorted(label_sets.get(claim.id, ()), key=sorted):
                    if terms not in present:
                        todo.append(CandidateQuery(claim.id, tuple(sorted(terms)), source="annotated"))
                for cand in todo:
                    fvec = extract_features(
                        cand,
                        claim,
                        store,
                        vectors,
                        seed=seed,
                        fractions=self.config.spanning_fractions,
                        method=self.config.wmd_method,
                    )
                    rec = {
                        "claim_id": cand.claim_id,
                        "terms": list(cand.terms),
                        "source": cand.source,
                        "features": [float(x) for x in fvec.as_array()],
                    }
                    fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
        return ["vectors.txt", "features.jsonl"]

    def _dataset(self) -> RankingDataset:
        table = self.features_table()
        return assemble(
            self.claims(),
            self.labels().all(),
            self.store(),
            self.vectors(),
            mode=self.config.candidate_mode,
            cap=self.config.candidate_cap,
            seed=self.stage_seed("featurize"),
            features_by_terms=table,
        )

    def _stage_train(self) -> list[str]:
        dataset = self._dataset()
        write_letor(dataset, self.out("dataset.letor"))
        hp = Hyperparams.coerce(self.config.ltr or None)
        from .ltr import nearmiss3, standardize_stats

        means, stds = standardize_stats(dataset.groups)
        balanced = RankingDataset(
            [nearmiss3(g, means=means, stds=stds) if g.has_signal() else g for g in dataset.groups]
        )
        model = train(balanced, hp, seed=self.stage_seed("train"))
        model.save(self.out("model.json"))
        return ["dataset.letor", "model.json"]

    def _stage_cv(self) -> list[str]:
        dataset = self._dataset()
        k = min(self.config.cv_folds, len(dataset.groups))
        seed = self.stage_seed("cv")
        if self.config.ltr_grid:
            from .ltr import grid_search

            best, table = grid_search(dataset, self.config.ltr_grid, k=k, seed=seed)
            best_map = max(row["mean_map"] for row in table)
            payload = {
                "k": k,
                "mean_map": best_map,
                "best_hyperparams": asdict(best),
                "grid": table,
            }
        else:
            hp = Hyperparams.coerce(self.config.ltr or None)
            result = cross_validate(dataset, k=k, hyperparams=hp, seed=seed)
            payload = {
                "k": k,
                "fold_maps": result["fold_maps"],
                "mean_map": result["mean_map"],
                "hyperparams": asdict(hp),
            }
        _write_json(self.out("cv.json"), payload)
        return ["cv.json"]

    def _stage_extract(self) -> list[str]:
        store = self.store()
        model = self.model()
        table = self.features_table()
        extraction: dict[str, dict] = {}
        for claim in self.claims():
            rows = sorted(
                ((terms, fvec) for (cid, terms), fvec in table.items() if cid == claim.id),
                key=lambda item: sorted(item[0]),
            )
            if not rows:
                warnings.warn(f"claim {claim.id!r}: no candidates, nothing to extract")
                continue
            X = np.vstack([fvec.as_array() for _, fvec in rows])
            scores = model.score(X)
            order = sorted(range(len(rows)), key=lambda i: (-scores[i], tuple(sorted(rows[i][0]))))
            best_terms = tuple(sorted(rows[order[0]][0]))
            hits = store.query(best_terms)
            by_community: dict[str, list] = {}
            for doc in hits:
                by_community.setdefault(doc.community, []).append([doc.platform, doc.id])
            extraction[claim.id] = {
                "terms": list(best_terms),
                "score": float(scores[order[0]]),
                "ranking": [
                    {"terms": sorted(rows[i][0]), "score": float(scores[i])} for i in order
                ],
                "hits": dict(sorted(by_community.items())),
            }
        _write_json(self.out("extraction.json"), extraction)
        return ["extraction.json"]

    def _stage_embed(self) -> list[str]:
        store = self.store()
        extraction = self.extraction()
        emb_cfg = dict(self.config.embedding)
        emb_cfg.pop("fallback", None)
        min_docs = emb_cfg.pop("min_docs", 50)
        params = embeddings.SkipgramParams(**{**{"dim": 50, "epochs": 5}, **emb_cfg})
        outputs = []
        skipped = []
        emb_dir = self.out("embeddings")
        emb_dir.mkdir(parents=True, exist_ok=True)
        for claim_id in sorted(extraction):
            for community in self.config.communities:
                keys = extraction[claim_id]["hits"].get(community, [])
                docs = [store.get(p, i) for p, i in keys]
                docs = [d for d in docs if d is not None]
                if len(docs) < min_docs:
                    skipped.append({"claim_id": claim_id, "community": community, "docs": len(docs)})
                    continue
                seed = _stable_seed(self.config.seed, "embed", claim_id, community)
                try:
                    model = embeddings.train_skipgram(
                        docs, params, seed=seed, claim_id=claim_id, community=community
                    )
                except ValueError:
                    skipped.append({"claim_id": claim_id, "community": community, "docs": len(docs)})
                    continue
                rel = f"embeddings/{claim_id}__{community}.vec"
                model.save(self.out(rel))
                outputs += [rel, rel + ".meta.json"]
        _write_json(self.out("embed_report.json"), {"skipped": skipped, "trained": len(outputs) // 2})
        return outputs + ["embed_report.json"]

    def _embedding_models(self) -> dict[tuple[str, str], embeddings.EmbeddingModel]:
        models = {}
        for path in sorted(self.out("embeddings").glob("*.vec")):
            model = embeddings.EmbeddingModel.load(path)
            models[(model.claim_id, model.community)] = model
        return models

    def _stage_similarity(self) -> list[str]:
        extraction = self.extraction()
        keywords = {cid: extraction[cid]["terms"] for cid in extraction}
        matrix = embeddings.similarity_matrix(self._embedding_models(), keywords, self.config.communities)
        matrix.to_csv(self.out("similarity.csv"))
        payload = {
            "communities": matrix.communities,
            "values": [[None if np.isnan(v) else float(v) for v in row] for row in matrix.values],
            "per_claim": {
                cid: [[None if np.isnan(v) else float(v) for v in row] for row in m]
                for cid, m in sorted(matrix.per_claim.items())
            },
        }
        _write_json(self.out("similarity.json"), payload)
        return ["similarity.csv", "similarity.json"]

    def _stage_hawkes(self) -> list[str]:
        store = self.store()
        extraction = self.extraction()
        hk = dict(self.config.hawkes)
        topic_exclusions = hk.pop("topic_exclusions", {})
        fit_kwargs = {
            "beta_grid": hk.get("beta_grid", (0.5, 1.0, 2.0, 4.0, 8.0)),
            "iters": hk.get("iters", 2000),
            "burn_in": hk.get("burn_in", 500),
            "mu_prior": tuple(hk.get("mu_prior", (1.0, 1.0))),
            "w_prior": tuple(hk.get("w_prior", (1.0, 1.0))),
            "attribution": hk.get("attribution", "ancestor"),
        }
        inf_dir = self.out("influence")
        inf_dir.mkdir(parents=True, exist_ok=True)
        outputs = []
        matrices: dict[str, hawkes.InfluenceMatrix] = {}
        fits: dict[str, dict] = {}
        for claim_id in sorted(extraction):
            docs = self._extracted_docs(claim_id)
            by_comm: dict[str, list[Document]] = {c: [] for c in self.config.communities}
            for doc in docs:
                if doc.community in by_comm:
                    by_comm[doc.community].append(doc)
            series = hawkes.build_series(claim_id, by_comm, self.config.communities)
            if not series.fittable:
                fits[claim_id] = {"fittable": False, "events": series.counts().tolist()}
                continue
            seed = _stable_seed(self.config.seed, "hawkes", claim_id)
            fit = hawkes.fit_gibbs(series, seed=seed, **fit_kwargs)
            matrices[claim_id] = hawkes.influence(fit, series)
            fits[claim_id] = {
                "fittable": True,
                "events": series.counts().tolist(),
                "mu": fit.params.mu.tolist(),
                "W": fit.params.W.tolist(),
                "beta": fit.params.beta,
                "diagnostics": {k: v for k, v in fit.diagnostics.items()},
            }
        _write_json(self.out("influence", "fits.json"), fits)
        outputs.append("influence/fits.json")

        claims = self.claims()
        if matrices:
            overall = hawkes.aggregate_by_topic(matrices, claims, None)
            overall.to_csv(self.out("influence", "overall.csv"))
            outputs.append("influence/overall.csv")
            for topic in self.config.topics:
                ids = [c.id for c in claims if topic in c.topics and c.id in matrices]
                if not ids:
                    continue
                agg = hawkes.aggregate_influence(
                    matrices, ids, exclude_communities=topic_exclusions.get(topic, ())
                )
                rel = f"influence/topic_{topic}.csv"
                agg.to_csv(self.out(rel))
                outputs.append(rel)
        return outputs

    def _stage_analyze(self) -> list[str]:
        store = self.store()
        extraction = self.extraction()
        out_dir = self.out("analytics")
        out_dir.mkdir(parents=True, exist_ok=True)
        seed = self.stage_seed("analyze")

        spans: dict[str, float] = {}
        spans_platform: dict[str, dict[str, float]] = {}
        matched: list[Document] = []
        matched_keys: set[tuple[str, str]] = set()
        for claim_id in sorted(extraction):
            docs = self._extracted_docs(claim_id)
            if not docs:
                continue
            spans[claim_id] = analytics.lifespan(docs)
            spans_platform[claim_id] = analytics.lifespan_by_platform(docs)
            for doc in docs:
                if doc.key not in matched_keys:
                    matched_keys.add(doc.key)
                    matched.append(doc)

        ccdf_payload = {
            "overall": [[x, y] for x, y in analytics.ccdf_table(list(spans.values()))] if spans else [],
            "per_claim_months": dict(sorted(spans.items())),
        }
        _write_json(out_dir / "lifespan.json", ccdf_payload)
        with open(out_dir / "lifespan_ccdf.csv", "w", encoding="utf-8") as fh:
            fh.write("months,ccdf\n")
            for x, y in ccdf_payload["overall"]:
                fh.write(f"{x!r},{y!r}\n")

        posts = [d for d in matched if d.kind == "post"]
        comments = [d for d in matched if d.kind == "comment"]
        tweets = [d for d in matched if d.kind == "tweet"]
        submission_comments = store.comments_under([d.id for d in posts])
        baseline_comms = self.config.baseline_communities or self.config.communities
        baseline_posts = analytics.sample_baseline(
            store, baseline_comms, "post", len(posts), seed=seed, exclude_ids=matched_keys
        )
        baseline_comments = analytics.sample_baseline(
            store, baseline_comms, "comment", len(comments), seed=seed + 1, exclude_ids=matched_keys
        )

        tox_cfg = analytics.ScoringConfig(
            **{
                **{"mode": "stub", "cache_path": str(out_dir / "toxicity_cache.jsonl")},
                **self.config.toxicity,
            }
        )
        client = analytics.ScoringClient(tox_cfg)
        groups: dict[str, list[float]] = {}
        unscored: dict[str, list[str]] = {}
        for name, docs in (
            ("conspiracy_posts", posts),
            ("conspiracy_comments", comments),
            ("tweets", tweets),
            ("submission_comments", submission_comments),
            ("baseline_posts", baseline_posts),
            ("baseline_comments", baseline_comments),
        ):
            scores, missing = client.score(docs)
            if missing:
                unscored[name] = missing
            if scores:
                groups[name] = [s.score for s in scores]

        report = analytics.emit_distributions(groups) if groups else None
        if report is not None:
            _write_json(out_dir / "toxicity.json", report.to_json())
            with open(out_dir / "toxicity_cdf.csv", "w", encoding="utf-8") as fh:
                names = sorted(report.cdf)
                fh.write("score," + ",".join(names) + "\n")
                for i, x in enumerate(report.grid):
                    fh.write(f"{float(x)!r}")
                    for name in names:
                        fh.write(f",{float(report.cdf[name][i])!r}")
                    fh.write("\n")
            with open(out_dir / "ks_table.csv", "w", encoding="utf-8") as fh:
                fh.write("a,b,d,p,n1,n2,flagged\n")
                for row in report.ks_table:
                    fh.write(
                        f"{row['a']},{row['b']},{row['d']!r},{row['p']!r},{row['n1']},{row['n2']},{int(row['flagged'])}\n"
                    )
        _write_json(out_dir / "unscored.json", unscored)
        outputs = ["analytics/lifespan.json", "analytics/lifespan_ccdf.csv", "analytics/unscored.json"]
        if report is not None:
            outputs += ["analytics/toxicity.json", "analytics/toxicity_cdf.csv", "analytics/ks_table.csv"]
        return outputs

    def _stage_report(self) -> list[str]:
        report_dir = self.out("report")
        report_dir.mkdir(parents=True, exist_ok=True)
        outputs = []
        copies = [
            ("analytics/lifespan_ccdf.csv", "report/lifespan_ccdf.csv"),
            ("analytics/lifespan.json", "report/lifespan.json"),
            ("analytics/toxicity_cdf.csv", "report/toxicity_cdf.csv"),
            ("analytics/toxicity.json", "report/toxicity.json"),
            ("analytics/ks_table.csv", "report/ks_table.csv"),
            ("similarity.csv", "report/similarity_heatmap.csv"),
            ("similarity.json", "report/similarity_heatmap.json"),
            ("influence/overall.csv", "report/influence_overall.csv"),
        ]
        for src, dst in copies:
            if self.out(src).exists():
                shutil.copyfile(self.out(src), self.out(dst))
                outputs.append(dst)
        for topic in self.config.topics:
            src = f"influence/topic_{topic}.csv"
            if self.out(src).exists():
                dst = f"report/influence_{topic}.csv"
                shutil.copyfile(self.out(src), self.out(dst))
                outputs.append(dst)

        store = self.store()
        counts = store.counts()
        extraction = self.extraction()
        matched_counts = {"post": 0, "comment": 0, "tweet": 0}
        for claim_id in extraction:
            for doc in self._extracted_docs(claim_id):
                matched_counts[doc.kind] = matched_counts.get(doc.kind, 0) + 1
        lines = [
            "corpus summary",
            f"  total documents: {counts['total']}",
        ]
        for kind, n in counts["per_kind"].items():
            lines.append(f"  {kind}s: {n}")
        lines.append("  per community:")
        for comm, n in counts["per_community"].items():
            lines.append(f"    {comm}: {n}")
        lines.append("extraction summary")
        lines.append(f"  claims with extraction: {len(extraction)}")
        lines.append(
            f"  matched documents: {sum(matched_counts.values())}"
            f" (posts {matched_counts.get('post', 0)},"
            f" comments {matched_counts.get('comment', 0)},"
            f" tweets {matched_counts.get('tweet', 0)})"
        )
        (self.out("report", "summary.txt")).write_text("\n".join(lines) + "\n", encoding="utf-8")
        outputs.append("report/summary.txt")
        return outputs


def run(stage: str, config: PipelineConfig, force: bool = False) -> dict:
    return Pipeline(config).run(stage, force=force)
