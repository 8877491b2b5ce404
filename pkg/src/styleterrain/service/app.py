"""HTTP authoring service: sessions with undo, latent editing endpoints,
async amplification jobs, a bundle registry, and a latent gallery.

Interactive operations (generate, mix, interpolate, blend) run
synchronously; amplify and optimizer inversion run as polled jobs. Each
session's mutations are serialized by its own lock; bundle weights are
shared read-only across requests.
"""

from __future__ import annotations

import base64
import io
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field
from PIL import Image

from ..heightfield import (Heightfield, NormalizedField, RegionMask,
                           decode_png16, denormalize, encode_png16, hillshade,
                           normalize, resample)
from ..latent import (StyleMixSpec, interpolate, load_latent, region_blend,
                      save_latent, style_mix)
from ..networks.inference import encode as encode_field
from ..networks.inference import synthesize
from ..networks.latents import LatentWPlus
from ..superres import amplify
from .config import ServiceConfig
from .jobs import JobManager
from .registry import BundleRegistry
from .sessions import Session, SessionStore

DEFAULT_RANGE_M = (0.0, 1000.0)


class CreateSession(BaseModel):
    bundle: str | None = None
    resolution: int | None = Field(default=None, ge=2, le=4096)
    png_base64: str | None = None
    min_m: float = DEFAULT_RANGE_M[0]
    max_m: float = DEFAULT_RANGE_M[1]
    cell_size_m: float = Field(default=30.0, gt=0)


class GenerateBody(BaseModel):
    noise_seed: int = 0


class MixBody(BaseModel):
    other_latent_ref: str
    crossover_index: int = Field(ge=0)
    noise_seed: int = 0


class InterpolateBody(BaseModel):
    other_latent_ref: str
    alpha: float
    noise_seed: int = 0


class RegionBlendBody(BaseModel):
    mask_png_base64: str
    other_terrain_ref: str


class AmplifyBody(BaseModel):
    bundle: str | None = None
    upscale: int = Field(ge=1)
    noise_seed: int = 0


class SaveLatentBody(BaseModel):
    name: str = Field(min_length=1, max_length=64, pattern=r"^[\w\-]+$")


def _session_payload(session: Session) -> dict:
    return {
        "id": session.id,
        "bundle": session.bundle_name,
        "width": session.terrain.width,
        "height": session.terrain.height,
        "cell_size_m": session.terrain.cell_size,
        "min_m": session.terrain.min_m,
        "max_m": session.terrain.max_m,
        "has_latent": session.latent is not None,
        "undo_depth": len(session.undo_stack),
    }


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig.load()
    app = FastAPI(title="styleterrain authoring service")
    registry = BundleRegistry(config.bundle_dir)
    store = SessionStore(config.session_dir, max_undo=config.max_undo)
    jobs = JobManager()
    gallery_dir = Path(config.session_dir) / "_gallery"
    gallery_dir.mkdir(parents=True, exist_ok=True)

    @app.exception_handler(ValueError)
    async def value_error_handler(_request: Request, exc: ValueError):
        return JSONResponse(status_code=422,
                            content={"detail": [{"msg": str(exc)}]})

    @app.exception_handler(KeyError)
    async def key_error_handler(_request: Request, exc: KeyError):
        return JSONResponse(status_code=404,
                            content={"detail": [{"msg": str(exc.args[0])}]})

    def _session_or_404(session_id: str) -> Session:
        session = store.get(session_id)
        if session is None:
            raise HTTPException(404, detail=f"unknown session {session_id}")
        return session

    def _bundle_for(session: Session):
        name = session.bundle_name or registry.default_name(config.default_bundle)
        return registry.get(name)

    def _resolve_latent(ref: str) -> LatentWPlus:
        """A latent reference: 'session:<id>' or 'gallery:<name>'."""
        kind, _, key = ref.partition(":")
        if kind == "session":
            other = _session_or_404(key)
            if other.latent is None:
                raise ValueError(f"session {key} has no stored latent")
            return other.latent
        if kind == "gallery":
            path = gallery_dir / f"{key}.lat"
            if not path.exists():
                raise HTTPException(404, detail=f"no gallery latent {key!r}")
            return load_latent(path)[0]
        raise ValueError(f"bad latent ref {ref!r}; use session:<id> or "
                         f"gallery:<name>")

    def _resolve_terrain(ref: str) -> Heightfield:
        kind, _, key = ref.partition(":")
        if kind == "session":
            return _session_or_404(key).terrain
        raise ValueError(f"bad terrain ref {ref!r}; use session:<id>")

    def _range_for(session: Session) -> tuple[float, float]:
        lo, hi = session.terrain.min_m, session.terrain.max_m
        return (lo, hi) if hi > lo else DEFAULT_RANGE_M

    def _synthesize_into(session: Session, latent: LatentWPlus,
                         noise_seed: int) -> None:
        """Shared tail of every latent-driven mutation: synthesize, scale to
        the session's range, snapshot for undo, swap in."""
        bundle = _bundle_for(session)
        field = synthesize(latent, bundle, noise_seed=noise_seed)
        lo, hi = _range_for(session)
        terrain = denormalize(
            NormalizedField(values=field.values, min_m=lo, max_m=hi),
            cell_size=session.terrain.cell_size)
        session.push_undo(config.max_undo)
        session.terrain = terrain
        session.latent = latent
        store.persist(session)

    # -- sessions -----------------------------------------------------------

    @app.post("/sessions")
    def create_session(body: CreateSession):
        if body.bundle is not None and body.bundle not in registry.names():
            raise HTTPException(404, detail=f"no bundle named {body.bundle!r}")
        if body.png_base64 is not None:
            values = decode_png16(base64.b64decode(body.png_base64))
            field = NormalizedField(values=values, min_m=body.min_m,
                                    max_m=body.max_m)
            terrain = denormalize(field, cell_size=body.cell_size_m)
        else:
            resolution = body.resolution
            if resolution is None:
                name = body.bundle or registry.default_name(config.default_bundle)
                resolution = registry.get(name).config.resolution
            terrain = Heightfield(
                elevations=np.zeros((resolution, resolution)),
                cell_size=body.cell_size_m)
        session = store.create(terrain, bundle_name=body.bundle)
        return _session_payload(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_payload(_session_or_404(session_id))

    @app.post("/sessions/{session_id}/terrain")
    def upload_terrain(session_id: str, body: CreateSession):
        """Replace the session terrain from an uploaded 16-bit PNG."""
        session = _session_or_404(session_id)
        if body.png_base64 is None:
            raise ValueError("png_base64 is required")
        with session.lock:
            values = decode_png16(base64.b64decode(body.png_base64))
            field = NormalizedField(values=values, min_m=body.min_m,
                                    max_m=body.max_m)
            session.push_undo(config.max_undo)
            session.terrain = denormalize(field, cell_size=body.cell_size_m)
            store.persist(session)
            return _session_payload(session)

    @app.post("/sessions/{session_id}/encode")
    def encode_session(session_id: str):
        session = _session_or_404(session_id)
        with session.lock:
            bundle = _bundle_for(session)
            res = bundle.config.resolution
            terrain = session.terrain
            if terrain.width != res or terrain.height != res:
                terrain = resample(terrain, res, res)
            latent = encode_field(normalize(terrain), bundle)
            session.push_undo(config.max_undo)
            session.latent = latent
            store.persist(session)
            return _session_payload(session)

    @app.post("/sessions/{session_id}/generate")
    def generate(session_id: str, body: GenerateBody):
        session = _session_or_404(session_id)
        with session.lock:
            if session.latent is None:
                raise ValueError("session has no stored latent; encode first")
            _synthesize_into(session, session.latent, body.noise_seed)
            return _session_payload(session)

    @app.post("/sessions/{session_id}/mix")
    def mix(session_id: str, body: MixBody):
        session = _session_or_404(session_id)
        with session.lock:
            if session.latent is None:
                raise ValueError("session has no stored latent; encode first")
            detail = _resolve_latent(body.other_latent_ref)
            mixed = style_mix(StyleMixSpec(body.crossover_index,
                                           session.latent, detail))
            _synthesize_into(session, mixed, body.noise_seed)
            return _session_payload(session)

    @app.post("/sessions/{session_id}/interpolate")
    def interpolate_endpoint(session_id: str, body: InterpolateBody):
        session = _session_or_404(session_id)
        with session.lock:
            if session.latent is None:
                raise ValueError("session has no stored latent; encode first")
            other = _resolve_latent(body.other_latent_ref)
            blended = interpolate(session.latent, other, body.alpha)
            _synthesize_into(session, blended, body.noise_seed)
            return _session_payload(session)

    @app.post("/sessions/{session_id}/region_blend")
    def region_blend_endpoint(session_id: str, body: RegionBlendBody):
        session = _session_or_404(session_id)
        with session.lock:
            other = _resolve_terrain(body.other_terrain_ref)
            mask = RegionMask(
                alpha=decode_png16(base64.b64decode(body.mask_png_base64)))
            blended = region_blend(session.terrain, other, mask)
            session.push_undo(config.max_undo)
            session.terrain = blended
            store.persist(session)
            return _session_payload(session)

    @app.post("/sessions/{session_id}/amplify")
    def amplify_endpoint(session_id: str, body: AmplifyBody):
        session = _session_or_404(session_id)
        bundle_name = body.bundle or session.bundle_name \
            or registry.default_name(config.default_bundle)
        bundle = registry.get(bundle_name)

        def run(job):
            source = session.terrain
            result = amplify(source, bundle, body.upscale,
                             noise_seed=body.noise_seed)
            with session.lock:
                session.push_undo(config.max_undo)
                session.terrain = result
                store.persist(session)
            return {"session": session.id, "width": result.width,
                    "height": result.height,
                    "cell_size_m": result.cell_size}

        job = jobs.submit("amplify", run)
        return {"job_id": job.id, "status_url": f"/jobs/{job.id}"}

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str):
        session = _session_or_404(session_id)
        with session.lock:
            if not session.undo():
                raise ValueError("nothing to undo")
            store.persist(session)
            return _session_payload(session)

    @app.get("/sessions/{session_id}/terrain.png")
    def terrain_png(session_id: str):
        session = _session_or_404(session_id)
        with session.lock:
            n = normalize(session.terrain)
            headers = {
                "X-Min-M": str(n.min_m),
                "X-Max-M": str(n.max_m),
                "X-Cell-Size-M": str(session.terrain.cell_size),
            }
            return Response(content=encode_png16(n.values),
                            media_type="image/png", headers=headers)

    @app.get("/sessions/{session_id}/hillshade.png")
    def hillshade_png(session_id: str, azimuth: float = 315.0,
                      altitude: float = 45.0):
        session = _session_or_404(session_id)
        with session.lock:
            shade = hillshade(session.terrain, azimuth=azimuth,
                              altitude=altitude)
        img = Image.fromarray(np.round(shade * 255).astype(np.uint8), mode="L")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    # -- latent gallery -------------------------------------------------------

    @app.post("/sessions/{session_id}/latents")
    def save_to_gallery(session_id: str, body: SaveLatentBody):
        session = _session_or_404(session_id)
        with session.lock:
            if session.latent is None:
                raise ValueError("session has no stored latent to save")
            save_latent(session.latent, gallery_dir / f"{body.name}.lat")
        return {"name": body.name, "ref": f"gallery:{body.name}"}

    @app.get("/latents")
    def list_gallery():
        entries = []
        for path in sorted(gallery_dir.glob("*.lat")):
            latent, version = load_latent(path)
            entries.append({"name": path.stem, "ref": f"gallery:{path.stem}",
                            "layers": latent.num_layers, "dim": latent.dim,
                            "bundle_version": version})
        return entries

    # -- jobs and registry ------------------------------------------------------

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(404, detail=f"unknown job {job_id}")
        return job.to_dict()

    @app.get("/bundles")
    def bundles():
        return registry.list()

    ui_dist = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    if not ui_dist.exists():
        ui_dist = Path("frontend/dist")
    if ui_dist.exists():
        app.mount("/ui", StaticFiles(directory=ui_dist, html=True), name="ui")

    return app
