"""Random feed-forward test networks with controlled relaxation conditioning."""

from __future__ import annotations

import numpy as np

from fabricsnn.netlist import (
    FLOATING_ZEROS,
    GROUNDED_ZEROS,
    FabricNetwork,
    NeuronNode,
    ResistorPalette,
    SynapseEdge,
    ROLE_HIDDEN,
    ROLE_INPUT,
    ROLE_OUTPUT,
)

R_LO = 3300.0
R_HI = 680_000.0


def _random_resistance(rng: np.random.Generator) -> float:
    return float(np.exp(rng.uniform(np.log(R_LO), np.log(R_HI))))


def random_network(
    rng: np.random.Generator,
    max_nodes: int = 12,
    n_inputs: int = 3,
    grounding_mode: str = GROUNDED_ZEROS,
) -> FabricNetwork:
    """Layered net with random palettes/leaks, at most max_nodes nodes total.

    Every non-input node gets at least one incoming edge, so outputs stay
    reachable.  Leaks are drawn relative to each node's edge conductance,
    which keeps the relaxation oracle briskly convergent.
    """
    budget = max_nodes - n_inputs
    n_outputs = int(rng.integers(1, 3))
    n_hidden_layers = int(rng.integers(1, 3))
    sizes = [n_inputs]
    remaining = budget - n_outputs
    for _ in range(n_hidden_layers):
        take = int(rng.integers(1, max(2, remaining - (n_hidden_layers - 1)) + 1))
        take = min(take, remaining)
        if take == 0:
            break
        sizes.append(take)
        remaining -= take
    sizes.append(n_outputs)

    layers: list[list[str]] = []
    nodes: list[NeuronNode] = []
    counter = 0
    for depth, size in enumerate(sizes):
        ids = []
        for _ in range(size):
            if depth == 0:
                node_id = f"I{counter}"
                nodes.append(NeuronNode(node_id, 0, ROLE_INPUT))
            else:
                role = ROLE_OUTPUT if depth == len(sizes) - 1 else ROLE_HIDDEN
                node_id = f"M{counter}" if role == ROLE_HIDDEN else f"O{counter}"
                # Leak placeholder; fixed up once the edges are known.
                nodes.append(
                    NeuronNode(node_id, depth, role, leak_resistance=1.0,
                               capacitance=220e-9)
                )
            ids.append(node_id)
            counter += 1
        layers.append(ids)

    edges: list[SynapseEdge] = []

    def add_edge(src: str, dst: str) -> None:
        n_opts = int(rng.integers(1, 4))
        values = tuple(sorted(_random_resistance(rng) for _ in range(n_opts)))
        edges.append(
            SynapseEdge(src, dst, ResistorPalette(values),
                        selected=int(rng.integers(0, n_opts)))
        )

    for depth in range(len(layers) - 1):
        for dst in layers[depth + 1]:
            srcs = list(layers[depth])
            must = srcs[int(rng.integers(0, len(srcs)))]
            for src in srcs:
                if src != must and rng.random() > 0.7:
                    continue
                add_edge(src, dst)

    # A terminal with no edge would be an isolated unknown in floating mode.
    fanned_out = {e.src for e in edges}
    for src in layers[0]:
        if src not in fanned_out:
            add_edge(src, layers[1][int(rng.integers(0, len(layers[1])))])

    # Leak between 0.5x and 3x of the node's total edge conductance.
    g_sum = {n.id: 0.0 for n in nodes}
    for e in edges:
        g = 1.0 / e.resistance
        g_sum[e.src] += g
        g_sum[e.dst] += g
    fixed = []
    for node in nodes:
        if node.role == ROLE_INPUT:
            fixed.append(node)
            continue
        g_leak = float(rng.uniform(0.5, 3.0)) * max(g_sum[node.id], 1.0 / R_HI)
        fixed.append(
            NeuronNode(node.id, node.layer, node.role,
                       leak_resistance=1.0 / g_leak, capacitance=220e-9)
        )
    return FabricNetwork(
        nodes=tuple(fixed), edges=tuple(edges),
        supply_voltage=5.0, threshold=2.3, grounding_mode=grounding_mode,
    )
