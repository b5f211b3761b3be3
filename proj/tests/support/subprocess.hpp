#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "labp/graph.hpp"

// Minimal helper for driving the CLI binary end to end.

namespace labp::testproc {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline RunResult run(const std::string& command) {
    namespace fs = std::filesystem;
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() / ("labp_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    fs::path out = dir / ("out" + std::to_string(counter));
    fs::path err = dir / ("err" + std::to_string(counter));
    ++counter;

    std::string full = command + " > " + out.string() + " 2> " + err.string();
    int status = std::system(full.c_str());
    RunResult r;
    if (status >= 0 && WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

inline std::filesystem::path write_graph_file(const std::string& name, const std::string& contents) {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / ("labp_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    fs::path p = dir / name;
    std::ofstream(p) << contents;
    return p;
}

inline std::string graph_file_text(const labp::Graph& g) {
    std::string s;
    for (labp::EdgeId e = 0; e < g.edge_count(); ++e) {
        auto [u, v] = g.endpoints(e);
        s += std::to_string(u) + " " + std::to_string(v) + "\n";
    }
    return s;
}

}  // namespace labp::testproc
