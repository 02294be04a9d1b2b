"""Recover a comb probed by intermediate instruments instead of state/effect pairs.

Between steps the experimenter applies a CP map from a fixed set. The
measure-and-prepare set reproduces the ordinary design exactly. The second
set mixes the identity, a reset and random channels, which is closer to what
a device can do mid-circuit.
"""

from combtomo.comb import CombDims, choi_of_comb, random_comb
from combtomo.instruments import default_cptp_instruments, measure_prepare_instruments
from combtomo.metrics import uhlmann_fidelity
from combtomo.stiefel import OptimizerConfig
from combtomo.tomography import ExperimentSetup, default_single_qubit_sets, iqct_run

dims = CombDims.from_lists([2, 2], [2, 2], [2, 2])
truth = random_comb(dims, seed=3)
preps, meas = default_single_qubit_sets()
cfg = OptimizerConfig(delta=1e-6)

for inst in (measure_prepare_instruments(preps, meas), default_cptp_instruments(2, seed=0)):
    setup = ExperimentSetup(preps, meas, inst)
    res = iqct_run(setup, list(dims.anc_dims), truth=truth, cfg=cfg, seed=0)
    f = uhlmann_fidelity(choi_of_comb(truth), choi_of_comb(res.comb))
    ranks = [r.design_rank for r in res.reports]
    print(f"{inst.label}: {len(inst)} instruments of span {inst.rank}, design ranks {ranks}, fidelity {f:.10f}")
