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

"""eBPF/XDP to VLIW compiler and simulator."""

from ._core import (
    CompileResult,
    Error,
    Maps,
    Program,
    VliwProgram,
    compile,
    decode,
    fuzz,
    hazard_check,
    load_corpus,
    n_checks,
    parse_asm,
    parse_schedule,
    pass_names,
    reduction_report,
    run_oracle,
    run_vliw,
)

__all__ = [
    "CompileResult",
    "Error",
    "Maps",
    "Program",
    "VliwProgram",
    "compile",
    "decode",
    "fuzz",
    "hazard_check",
    "load_corpus",
    "n_checks",
    "parse_asm",
    "parse_schedule",
    "pass_names",
    "reduction_report",
    "run_oracle",
    "run_vliw",
]
