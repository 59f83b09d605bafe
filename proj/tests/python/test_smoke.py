import pytest

import agmlab


def test_forest_matches_components():
    edges = [(1, 2), (2, 3), (4, 5)]
    dec = agmlab.decode_graph(6, edges, seed=1)
    assert dec.component_of == agmlab.components(6, edges)
    assert dec.component_count == 3
    assert len(dec.forest) == 3


def test_agm_round_reports_bits():
    n = 64
    path = [(v, v + 1) for v in range(1, n)]
    connected, avg_bits, max_bits = agmlab.run_agm(n, path, seed=5)
    assert connected
    assert 0 < avg_bits <= max_bits
    cfg = agmlab.SketchConfig.defaults(n, 5)
    assert cfg.reps == 4 * 6 and cfg.fp_bits == 32


def test_ur_schedule_and_decision():
    p = agmlab.urdec_desk_params(4096)
    assert (p.R, list(p.t)) == (4, [0, 3, 6, 9])
    wrong = 0
    for i in range(200):
        inst = agmlab.sample_urdec(p, i)
        assert inst.check() == ""
        side, bits = agmlab.ur_decide(inst, 1 / 64, 1000 + i)
        wrong += side != inst.side
        assert bits <= 55296
    assert wrong <= 3


def test_bad_params_raise_value_error():
    with pytest.raises(ValueError):
        agmlab.urdec_params(100, 0.01)


def test_conn_xor_rule():
    for seed in range(5):
        c = agmlab.sample_conn(1024, seed)
        assert c.connected == (sum(c.b) % 2 == 1)
        comps = agmlab.components(c.n, c.edges)
        assert (len(set(comps)) == 1) == c.connected


def test_blocks_are_valid():
    scale = agmlab.BlockScale.desk(1024)
    assert scale.block_n == 32
    for seed in range(20):
        b, problems = agmlab.sample_block(scale, seed, mixed=seed % 2 == 1)
        assert b in (0, 1) and problems == ""


def test_lab_process_and_lemma():
    assert "constant" in agmlab.protocol_names()
    trace, ok, detail = agmlab.process_a("constant", 3)
    assert ok, detail
    assert trace.splitlines()[-1].startswith(("DONE", "FAILED"))
    rows = agmlab.validate_lemma33(seed=0, process_seeds=1)
    assert rows and not any(r["violation"] for r in rows)
