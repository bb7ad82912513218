"""Array-level view of a network for the numeric kernels.

Stamping the conductance matrix lives here, once, for both grounding modes.
Public solver operations and the hot paths (learning scans, Monte Carlo
batches) all assemble through this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SingularSystemError
from .netlist import FLOATING_ZEROS, GROUNDED_ZEROS, FabricNetwork, InputPattern


@dataclass
class CompactNetwork:
    """Index arrays mirroring a FabricNetwork, in its edge declaration order."""

    network: FabricNetwork
    terminal_ids: tuple[str, ...]
    rc_ids: tuple[str, ...]
    src_is_term: np.ndarray  # (E,) uint8
    src_idx: np.ndarray      # (E,) int64, terminal or RC index
    dst_idx: np.ndarray      # (E,) int64, RC index
    connected: np.ndarray    # (E,) uint8
    opt_ptr: np.ndarray      # (E+1,) int64 into opt_r
    opt_r: np.ndarray        # flat palette resistances, ohms
    selected: np.ndarray     # (E,) int64
    leak_g: np.ndarray       # (n_rc,) siemens
    capacitance: np.ndarray  # (n_rc,) farads
    out_idx: np.ndarray      # (n_out,) int64 into rc order
    meas_idx: np.ndarray     # int64 into rc order

    @classmethod
    def from_network(cls, network: FabricNetwork) -> "CompactNetwork":
        terminal_ids = tuple(n.id for n in network.input_terminals)
        rc_ids = tuple(n.id for n in network.rc_nodes)
        t_index = {i: k for k, i in enumerate(terminal_ids)}
        r_index = {i: k for k, i in enumerate(rc_ids)}

        n_edges = len(network.edges)
        src_is_term = np.zeros(n_edges, dtype=np.uint8)
        src_idx = np.zeros(n_edges, dtype=np.int64)
        dst_idx = np.zeros(n_edges, dtype=np.int64)
        connected = np.zeros(n_edges, dtype=np.uint8)
        selected = np.zeros(n_edges, dtype=np.int64)
        opt_ptr = np.zeros(n_edges + 1, dtype=np.int64)
        flat = []
        for k, edge in enumerate(network.edges):
            if edge.src in t_index:
                src_is_term[k] = 1
                src_idx[k] = t_index[edge.src]
            else:
                src_idx[k] = r_index[edge.src]
            dst_idx[k] = r_index[edge.dst]
            connected[k] = 1 if edge.is_connected else 0
            selected[k] = edge.selected
            flat.extend(edge.options.values)
            opt_ptr[k + 1] = len(flat)

        leak_g = np.array([1.0 / n.leak_resistance for n in network.rc_nodes])
        capacitance = np.array([n.capacitance for n in network.rc_nodes])
        out_ids = {n.id for n in network.output_nodes}
        meas_ids = {n.id for n in network.measured_nodes}
        out_idx = np.array([k for k, i in enumerate(rc_ids) if i in out_ids],
                           dtype=np.int64)
        meas_idx = np.array([k for k, i in enumerate(rc_ids) if i in meas_ids],
                            dtype=np.int64)
        return cls(
            network=network, terminal_ids=terminal_ids, rc_ids=rc_ids,
            src_is_term=src_is_term, src_idx=src_idx, dst_idx=dst_idx,
            connected=connected, opt_ptr=opt_ptr,
            opt_r=np.array(flat, dtype=np.float64), selected=selected,
            leak_g=leak_g, capacitance=capacitance,
            out_idx=out_idx, meas_idx=meas_idx,
        )

    # -- conductances --------------------------------------------------------

    def edge_conductances(
        self,
        selection: np.ndarray | None = None,
        resistances: np.ndarray | None = None,
    ) -> np.ndarray:
        """Per-edge conductance; zero where disconnected.

        ``selection`` overrides the stored option choice; ``resistances``
        overrides the selected resistance outright (used by perturbation).
        """
        if resistances is None:
            sel = self.selected if selection is None else selection
            resistances = self.opt_r[self.opt_ptr[:-1] + sel]
        g = 1.0 / resistances
        return np.where(self.connected == 1, g, 0.0)

    # -- grounded-zeros assembly ---------------------------------------------

    def grounded_system(self, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(G, B_unit): conductance matrix and per-terminal injection columns.

        The injection for a pattern is B_unit @ v_term, so the matrix part is
        pattern independent in grounded mode.
        """
        n = len(self.rc_ids)
        G = np.zeros((n, n))
        BU = np.zeros((n, len(self.terminal_ids)))
        d = self.dst_idx
        s = self.src_idx
        term = self.src_is_term == 1
        np.add.at(G, (d, d), g)
        np.add.at(BU, (d[term], s[term]), g[term])
        rc = ~term
        np.add.at(G, (s[rc], s[rc]), g[rc])
        np.subtract.at(G, (s[rc], d[rc]), g[rc])
        np.subtract.at(G, (d[rc], s[rc]), g[rc])
        G[np.diag_indices(n)] += self.leak_g
        return G, BU

    def terminal_voltages(self, patterns: Sequence[InputPattern]) -> np.ndarray:
        """(P, T) source voltage per pattern and terminal."""
        supply = self.network.supply_voltage
        bits = np.array([p.bits for p in patterns], dtype=np.float64)
        if bits.shape[1] != len(self.terminal_ids):
            raise ValueError(
                f"pattern width {bits.shape[1]} != {len(self.terminal_ids)} terminals"
            )
        return supply * bits

    # -- either-mode assembly --------------------------------------------------

    def assemble(
        self,
        pattern: InputPattern,
        g: np.ndarray | None = None,
    ) -> tuple[tuple[str, ...], np.ndarray, np.ndarray, dict[str, float]]:
        """(unknown_ids, G, b, source_voltages) for one pattern.

        In grounded mode every terminal is a source (0 V or supply); in
        floating mode the zero-bit terminals become unknowns with no leak and
        are ordered ahead of the RC nodes.
        """
        if g is None:
            g = self.edge_conductances()
        network = self.network
        supply = network.supply_voltage
        if len(pattern.bits) != len(self.terminal_ids):
            raise ValueError(
                f"pattern width {len(pattern.bits)} != "
                f"{len(self.terminal_ids)} terminals"
            )

        if network.grounding_mode == GROUNDED_ZEROS:
            G, BU = self.grounded_system(g)
            v_term = supply * np.array(pattern.bits, dtype=np.float64)
            b = BU @ v_term
            sources = dict(zip(self.terminal_ids, v_term))
            self._check_isolated(self.rc_ids, G)
            return self.rc_ids, G, b, sources

        assert network.grounding_mode == FLOATING_ZEROS
        floating = [t for t, bit in zip(self.terminal_ids, pattern.bits) if bit == 0]
        unknown_ids = tuple(floating) + self.rc_ids
        index = {i: k for k, i in enumerate(unknown_ids)}
        n = len(unknown_ids)
        G = np.zeros((n, n))
        b = np.zeros(n)
        sources = {
            t: supply for t, bit in zip(self.terminal_ids, pattern.bits) if bit == 1
        }
        for k, edge in enumerate(network.edges):
            if not self.connected[k]:
                continue
            gk = g[k]
            d = index[edge.dst]
            if edge.src in sources:
                G[d, d] += gk
                b[d] += gk * supply
            else:
                u = index[edge.src]
                G[u, u] += gk
                G[d, d] += gk
                G[u, d] -= gk
                G[d, u] -= gk
        for i, rc_id in enumerate(self.rc_ids):
            G[index[rc_id], index[rc_id]] += self.leak_g[i]
        self._check_isolated(unknown_ids, G)
        return unknown_ids, G, b, sources

    @staticmethod
    def _check_isolated(unknown_ids: Sequence[str], G: np.ndarray) -> None:
        dead = [unknown_ids[i] for i in np.flatnonzero(np.diag(G) == 0.0)]
        if dead:
            raise SingularSystemError(
                f"no conductance path at node(s): {', '.join(dead)}", dead
            )
