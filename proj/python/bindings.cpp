// Copyright 2026 The xdpvliw Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "xdpvliw/analysis.hpp"
#include "xdpvliw/assembly.hpp"
#include "xdpvliw/codec.hpp"
#include "xdpvliw/harness.hpp"

namespace py = pybind11;
using namespace xdpvliw;

namespace {

py::object json_loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

std::vector<std::uint8_t> to_bytes(const py::bytes& b) {
    const std::string s = b;
    return {s.begin(), s.end()};
}

py::bytes from_bytes(const std::vector<std::uint8_t>& v) {
    return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

vm::Packet make_packet(const py::bytes& data, std::uint32_t port) {
    vm::Packet p;
    p.data = to_bytes(data);
    p.ingress_port = port;
    return p;
}

// Runs `fn(initial, final)`; when `maps` is given it is advanced to the final state.
template <class Fn>
auto with_maps(vm::MapStore* maps, const std::vector<isa::MapDef>& defs, Fn fn) {
    vm::MapStore fresh(defs);
    vm::MapStore next;
    auto r = fn(maps ? *maps : fresh, next);
    if (maps) *maps = std::move(next);
    return r;
}

py::dict result_dict(const vm::XdpResult& r) {
    py::dict d;
    d["action"] = vm::action_name(r.action);
    d["r0"] = r.r0;
    d["packet"] = from_bytes(r.packet);
    d["trap"] = r.trap ? py::object(py::str(r.trap->message)) : py::object(py::none());
    d["instructions"] = r.instructions;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "eBPF/XDP to VLIW compiler and simulator";
    py::register_exception<Error>(m, "Error", PyExc_ValueError);

    py::class_<isa::Program>(m, "Program")
        .def("__len__", &isa::Program::size)
        .def("asm", [](const isa::Program& p) { return isa::format_asm(p); })
        .def("encode", [](const isa::Program& p) { return from_bytes(isa::encode(p)); })
        .def("__eq__", [](const isa::Program& a, const isa::Program& b) { return a == b; });

    m.def("parse_asm", [](const std::string& text) { return isa::parse_asm(text); }, py::arg("text"));
    m.def("decode", [](const py::bytes& b) { return isa::decode(to_bytes(b)); }, py::arg("data"));
    m.def("n_checks", &analysis::n_checks, py::arg("n"));

    py::class_<vliw::VliwProgram>(m, "VliwProgram")
        .def_readonly("lanes", &vliw::VliwProgram::lanes)
        .def_property_readonly("rows", [](const vliw::VliwProgram& v) { return v.rows.size(); })
        .def("instruction_count", &vliw::VliwProgram::instruction_count)
        .def("static_ipc", &vliw::VliwProgram::static_ipc)
        .def("dump", [](const vliw::VliwProgram& v) { return vliw::dump_schedule(v); });
    m.def("parse_schedule", [](const std::string& text) { return vliw::parse_schedule(text); }, py::arg("text"));

    py::class_<opt::CompileResult>(m, "CompileResult")
        .def_readonly("vliw", &opt::CompileResult::vliw)
        .def_readonly("reduced", &opt::CompileResult::reduced)
        .def_property_readonly("report", [](const opt::CompileResult& r) {
            return json_loads(opt::format_report_json(r.report));
        });

    m.def(
        "compile",
        [](const isa::Program& p, int lanes, const std::vector<std::string>& disable, std::optional<int> max_boundary) {
            opt::LaneConstraints lc;
            lc.lanes = lanes;
            opt::PassOptions po;
            for (const auto& name : disable) {
                if (!harness::disable_pass(po, name)) throw Error("unknown pass " + name);
            }
            po.max_boundary_removals = max_boundary;
            return opt::compile(p, lc, po);
        },
        py::arg("program"), py::arg("lanes") = 4, py::arg("disable") = std::vector<std::string>{},
        py::arg("max_boundary_removals") = std::nullopt);
    m.def("pass_names", &harness::pass_names);

    py::class_<vm::MapStore>(m, "Maps")
        .def(py::init([](const std::string& json_text) { return harness::build_maps(harness::parse_map_config(json_text)); }),
             py::arg("json"))
        .def("copy", [](const vm::MapStore& s) { return vm::MapStore(s); })
        .def("__eq__", [](const vm::MapStore& a, const vm::MapStore& b) { return a.same_contents(b); });

    m.def(
        "run_oracle",
        [](const isa::Program& p, const py::bytes& packet, vm::MapStore* maps, std::uint32_t port) {
            return result_dict(with_maps(maps, p.maps, [&](const vm::MapStore& in, vm::MapStore& out) {
                return vm::run_oracle(p, make_packet(packet, port), in, &out);
            }));
        },
        py::arg("program"), py::arg("packet"), py::arg("maps") = nullptr, py::arg("port") = 0);

    m.def(
        "run_vliw",
        [](const vliw::VliwProgram& v, const py::bytes& packet, vm::MapStore* maps, std::uint32_t port) {
            const auto r = with_maps(maps, v.maps, [&](const vm::MapStore& in, vm::MapStore& out) {
                return sephirot::run_vliw(v, make_packet(packet, port), in, &out);
            });
            py::dict d = result_dict(r.result);
            d["rows"] = r.rows_executed;
            d["cycles"] = r.cycles;
            d["ipc"] = r.dynamic_ipc;
            d["hazards"] = r.hazard_violations.size();
            return d;
        },
        py::arg("compiled"), py::arg("packet"), py::arg("maps") = nullptr, py::arg("port") = 0);

    m.def(
        "hazard_check",
        [](const vliw::VliwProgram& v) {
            std::vector<std::string> out;
            for (const auto& h : sephirot::hazard_check(v)) out.push_back(sephirot::describe(h));
            return out;
        },
        py::arg("compiled"));

    m.def(
        "fuzz",
        [](std::uint64_t iterations, std::uint64_t seed, int lanes, unsigned jobs) {
            harness::FuzzOptions o;
            o.iterations = iterations;
            o.seed = seed;
            o.constraints.lanes = lanes;
            o.jobs = jobs;
            harness::FuzzSummary s;
            {
                py::gil_scoped_release release;
                s = harness::fuzz(o);
            }
            py::dict d;
            d["cases"] = s.cases;
            d["equivalent"] = s.equivalent;
            d["divergent"] = s.divergent;
            d["hazard_cases"] = s.hazard_cases;
            d["compile_errors"] = s.compile_errors;
            d["trapped"] = s.trapped;
            d["seconds"] = s.seconds;
            return d;
        },
        py::arg("iterations") = 1000, py::arg("seed") = 1, py::arg("lanes") = 4, py::arg("jobs") = 0);

    m.def(
        "load_corpus",
        [](const std::filesystem::path& root) {
            py::list out;
            for (const auto& e : harness::load_corpus(root)) {
                py::dict d;
                d["name"] = e.name;
                d["description"] = e.description;
                d["program"] = e.program;
                d["maps_json"] = harness::map_config_to_json(e.maps);
                py::list packets;
                for (const auto& p : e.packets) packets.append(py::make_tuple(from_bytes(p.data), p.ingress_port));
                d["packets"] = packets;
                py::list expected;
                for (auto a : e.expected) expected.append(vm::action_name(a));
                d["expected"] = expected;
                out.append(d);
            }
            return out;
        },
        py::arg("root"));

    m.def(
        "reduction_report",
        [](const std::filesystem::path& root, int lanes) {
            return json_loads(harness::format_reduction_json(harness::report_reduction(harness::load_corpus(root), lanes)));
        },
        py::arg("root"), py::arg("lanes") = 4);
}
