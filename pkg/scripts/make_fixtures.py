"""Regenerate the JSON fixtures shipped in ``src/privmac/fixtures``."""
from pathlib import Path

import numpy as np

from privmac import codesim, optimize, qstate
from privmac.io import Spec, serialize_spec

OUT = Path(__file__).resolve().parents[1] / "src" / "privmac" / "fixtures"
UNIFORM = np.array([0.5, 0.5])


def uniform_classical(users: int):
    return optimize.classical_ensemble([UNIFORM] * users)


def fixtures() -> dict[str, Spec]:
    out = {}
    out["noiseless_mac"] = Spec(
        note="Two binary senders; Bob reads both bits exactly and Eve's system is trivial.",
        cq_channel=codesim.noiseless_mac((2, 2)), ensemble=uniform_classical(2),
        rates=((0.5, 0.25), (0.5, 0.0)))
    out["b_trivial"] = Spec(
        note="Two binary senders; Bob's system is trivial and Eve reads both bits exactly.",
        cq_channel=codesim.trivial_bob_mac((2, 2)), ensemble=uniform_classical(2),
        rates=((0.0, 0.0), (0.0, 0.0)))
    out["degraded_eve"] = Spec(
        note="One binary sender; Bob reads the bit exactly, Eve sees it depolarized with probability 0.9.",
        cq_channel=codesim.degraded_eve_mac((2,), 0.0, 0.9), ensemble=uniform_classical(1),
        rates=((0.5, 0.0),))
    dc = optimize.two_user_damping(0.15, 0.3)
    out["degradable_mac"] = Spec(
        note="Two qubit senders, CNOT, then amplitude damping 0.15 and 0.3 on the outputs; degradable.",
        channel=dc.channel, env_dim=int(dc.channel.kraus.shape[0]), ensemble=uniform_classical(2))
    dep = qstate.with_users(qstate.depolarizing_channel(4, 0.5), (2, 2))
    out["depolarizing_mac"] = Spec(
        note="Two qubit senders through a two-qubit depolarizing channel with p = 0.5.",
        channel=dep, env_dim=int(dep.kraus.shape[0]), ensemble=uniform_classical(2))

    bell = np.zeros((4, 4))
    bell[np.ix_([0, 3], [0, 3])] = 0.5
    rng = np.random.default_rng(7)
    product = np.kron(qstate.random_density(2, rng), qstate.random_density(2, rng))
    cq = qstate.random_cq_state((2, 2), 2, rng)
    out["states"] = Spec(
        note="Bipartite states bell and product; cq is a two-register cq state on a qubit.",
        states={"bell": (bell, (2, 2)), "product": (product, (2, 2))}, cq_states={"cq": cq})
    out["aep_uniform"] = Spec(note="Uniform pmf on one binary sender and a binary side variable.",
                              pmf=np.full((2, 2), 0.25))
    return out


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, spec in fixtures().items():
        (OUT / f"{name}.json").write_text(serialize_spec(spec))
        print(f"wrote {name}.json")


if __name__ == "__main__":
    main()
