# Copyright 2026 The xdpvliw Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import os
from pathlib import Path

import pytest

import xdpvliw

CORPUS = Path(os.environ.get("XDPVLIW_CORPUS", Path(__file__).resolve().parents[2] / "corpus"))


def test_parse_and_round_trip():
    p = xdpvliw.parse_asm("r0 = 2\nexit\n")
    assert len(p) == 2
    assert xdpvliw.decode(p.encode()) == p
    assert xdpvliw.parse_asm(p.asm()) == p


def test_parse_error():
    with pytest.raises(ValueError):
        xdpvliw.parse_asm("r0 = = 1\n")


def test_compile_and_run():
    p = xdpvliw.parse_asm("r0 = 2\nexit\n")
    c = xdpvliw.compile(p)
    assert c.vliw.rows == 1
    assert c.report["original_count"] == 2
    assert xdpvliw.hazard_check(c.vliw) == []
    pkt = bytes(64)
    assert xdpvliw.run_oracle(p, pkt)["action"] == "PASS"
    assert xdpvliw.run_vliw(c.vliw, pkt)["action"] == "PASS"
    assert xdpvliw.parse_schedule(c.vliw.dump()).rows == 1


def test_unknown_pass():
    with pytest.raises(ValueError):
        xdpvliw.compile(xdpvliw.parse_asm("exit\n"), disable=["nope"])


def test_n_checks():
    assert [xdpvliw.n_checks(n) for n in (1, 2, 3, 4)] == [0, 3, 9, 18]


@pytest.mark.skipif(not CORPUS.is_dir(), reason="corpus not found")
def test_corpus_engines_agree():
    for entry in xdpvliw.load_corpus(CORPUS):
        c = xdpvliw.compile(entry["program"])
        oracle_maps = xdpvliw.Maps(entry["maps_json"])
        vliw_maps = oracle_maps.copy()
        for i, (data, port) in enumerate(entry["packets"]):
            a = xdpvliw.run_oracle(entry["program"], data, oracle_maps, port)
            b = xdpvliw.run_vliw(c.vliw, data, vliw_maps, port)
            assert a["action"] == b["action"]
            assert a["packet"] == b["packet"]
            assert oracle_maps == vliw_maps
            if entry["expected"]:
                assert a["action"] == entry["expected"][i]


def test_fuzz_small():
    s = xdpvliw.fuzz(iterations=50, seed=3)
    assert s["cases"] == 50
    assert s["equivalent"] == 50


def test_lane_sweep_monotone():
    if not CORPUS.is_dir():
        pytest.skip("corpus not found")
    report = xdpvliw.reduction_report(CORPUS)
    for sweep in report["lane_sweep"]:
        assert sweep["non_increasing"]
