"""Named sweep configurations for the standard figure datasets at desk scale."""

from __future__ import annotations

from .sweep import HALF, SweepConfig

SMALL_ALPHA = [0.01, 0.03, 0.05, 0.07, 0.1]


def _recipes() -> dict[str, dict]:
    delta_sweep_ff = dict(backend="free-fermion-thermo", axis="delta", start=-1.0, stop=1.0,
                          step=0.01, fixed=[0.0], N=[], L_A=[4, 60])
    return {
        # convertibility and majorization along Delta
        "fig2": dict(backend="exact-diag", axis="Delta", start=0.0, stop=6.0, step=0.1,
                     fixed=[0.3], N=[16], L_A=[4, 8],
                     tables=["points", "dlc", "majorization"]),
        # lowest entanglement levels with (Sz_A, p_A) labels
        "fig3": dict(backend="exact-diag", axis="Delta", start=0.0, stop=6.0, step=0.1,
                     fixed=[0.3], N=[16], L_A=[4, 8], tables=["points", "spectrum"],
                     spectrum_levels=4),
        # W = 4 sum omega^2 along Delta for several blocks
        "fig4": dict(backend="exact-diag", axis="Delta", start=0.0, stop=6.0, step=0.1,
                     fixed=[0.3], N=[20], L_A=[4, 8, 10], tables=["points"]),
        # convertibility along delta, infinite free-fermion chain
        "fig5": dict(delta_sweep_ff, tables=["points", "dlc"]),
        # majorization along delta, infinite free-fermion chain
        "fig6": dict(delta_sweep_ff, tables=["points", "majorization"]),
        # small-alpha entropies and spectrum along delta at Delta = 4
        "fig7": dict(backend="exact-diag", axis="delta", start=-0.95, stop=1.0, step=0.05,
                     fixed=[4.0], N=[16], L_A=[4], alpha={"values": SMALL_ALPHA},
                     tables=["points", "dlc", "spectrum"]),
        # half-chain S_2, xi_0 and energy curvature for finite-size scaling
        "fig8": dict(backend="exact-diag", axis="Delta", start=0.0, stop=6.0, step=0.1,
                     fixed=[0.3], N=[8, 12, 16, 20], L_A=[HALF], curvature=True,
                     tables=["points"]),
    }


RECIPE_NAMES = tuple(sorted(_recipes()))


def figure_recipe(name: str) -> SweepConfig:
    recipes = _recipes()
    if name not in recipes:
        raise KeyError(f"unknown recipe {name!r}; available: {', '.join(RECIPE_NAMES)}")
    return SweepConfig(name=name, out=f"out/{name}", **recipes[name])
