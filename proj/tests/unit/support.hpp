#pragma once

#include <string>
#include <unistd.h>

#include "opevo/sandbox/sandbox.hpp"

namespace testsupport {

inline opevo::sandbox::WorkerSpec stub_spec(double max_pilot = 30.0) {
    opevo::sandbox::WorkerSpec spec;
    spec.command = {OPEVO_STUB_WORKER};
    spec.max_pilot_seconds = max_pilot;
    return spec;
}

inline std::string stub_source(const std::string& directive) {
    return "def next_generation(parents, parent_objectives, problem_meta, seed):\n"
           "    # stub-behavior: " + directive + "\n"
           "    return [list(p) for p in parents]\n";
}

inline opevo::sandbox::OperatorArtifact stub_op(const std::string& directive, const std::string& id = "op") {
    opevo::sandbox::OperatorArtifact a;
    a.id = id;
    a.source = stub_source(directive);
    return a;
}

inline std::string tagged(const std::string& source) {
    return "<next_generation>\n" + source + "</next_generation>\n";
}

inline std::size_t live_children() { return opevo::sandbox::child_processes(::getpid()).size(); }

} // namespace testsupport
