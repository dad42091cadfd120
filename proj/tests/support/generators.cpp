#include "generators.hpp"

#include "apiprobe/io.hpp"

#include <array>
#include <cstdio>
#include <limits>
#include <sys/wait.h>
#include <unistd.h>

namespace apiprobe::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    std::string tmpl = (fs::temp_directory_path() / (tag + "-XXXXXX")).string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    write_text_file(path, content);
}

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

std::string random_identifier(Rng& rng, std::size_t min_len, std::size_t max_len) {
    static constexpr std::string_view first = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
    static constexpr std::string_view rest = "abcdefghijklmnopqrstuvwxyz0123456789";
    const auto len = uniform(rng, min_len, max_len);
    std::string s(1, first[uniform(rng, 0, first.size() - 1)]);
    while (s.size() < len) s += rest[uniform(rng, 0, rest.size() - 1)];
    return s;
}

std::vector<std::string> random_api_names(Rng& rng, std::size_t n, const std::string& prefix) {
    std::set<std::string> names;
    while (names.size() < n) names.insert(prefix + random_identifier(rng));
    return {names.begin(), names.end()};
}

std::string random_c_text(Rng& rng, std::size_t pieces) {
    static const std::array<std::string_view, 24> alphabet = {
        "//", "/*", "*/", "\"", "'", "\\", "\n", "\n", "R\"(", ")\"", "R\"x(", ")x\"", "abc", " ", "\t",
        "f(", "1'000", "u8R\"(", "x", "*", "/", "\\\n", "'\\''", "\"\\\"\""};
    std::string s;
    for (std::size_t i = 0; i < pieces; ++i) s += alphabet[uniform(rng, 0, alphabet.size() - 1)];
    return s;
}

GeneratedSource random_client_source(Rng& rng, const std::vector<std::string>& apis, std::size_t statements) {
    GeneratedSource g;
    auto pick = [&] { return apis[uniform(rng, 0, apis.size() - 1)]; };
    g.text = "#include <stdio.h>\n\nint run(void)\n{\n";
    for (std::size_t i = 0; i < statements; ++i) {
        const std::string api = pick();
        switch (uniform(rng, 0, 13)) {
            case 0:
            case 1:
                g.text += "    rc = " + api + "(a, b);\n";
                ++g.calls[api];
                break;
            case 2:
                g.text += "    if (" + api + (coin(rng) ? " " : "\t") + "(x) < 0) return -1;\n";
                ++g.calls[api];
                break;
            case 3:
                g.text += "#define WRAP_" + std::to_string(i) + "(x) " + api + "((x))\n";
                ++g.calls[api];
                break;
            case 4:
                g.text += "    // " + api + "(a);\n";
                break;
            case 5:
                g.text += "    /* " + api + "(a)\n       " + pick() + "(b) */\n";
                break;
            case 6:
                g.text += "    s = \"" + api + "(x) \\\"" + pick() + "(y)\\\"\";\n";
                break;
            case 7:
                g.text += "    c = '(';\n    r = R\"q(" + api + "(\" ) " + pick() + "(z))q\";\n";
                break;
            case 8:
                g.text += "    q_" + api + "(1); " + api + "_q(2);\n";
                break;
            case 9:
                g.text += "    fp = &" + api + ";\n    (void)sizeof " + api + ";\n";
                break;
            case 10:
                g.text += "    " + api + "\n        (x);\n";
                break;
            case 11:
                g.text += "    " + api + "  (two_spaces);\n";
                break;
            case 12:
                g.text += "    // continued \\\n    " + api + "(hidden);\n";
                break;
            default: {
                // Two calls on one line, one nested in the other's arguments.
                const std::string inner = pick();
                g.text += "    v = " + api + "(" + inner + "(1), 2);\n";
                ++g.calls[api];
                ++g.calls[inner];
                break;
            }
        }
    }
    g.text += "    return 0;\n}\n";
    return g;
}

Tracefile random_tracefile(Rng& rng, std::size_t max_files, std::size_t max_functions) {
    Tracefile tf;
    const auto nfiles = uniform(rng, 0, max_files);
    for (std::size_t f = 0; f < nfiles; ++f) {
        const std::string path = "/src/f" + std::to_string(uniform(rng, 0, max_files)) + ".c";
        if (tf.files.contains(path)) continue;
        FileCoverage fc;
        fc.path = path;
        const auto nfunc = uniform(rng, 0, max_functions);
        for (std::size_t k = 0; k < nfunc; ++k) {
            if (coin(rng, 0.3)) continue;
            FunctionRecord fr;
            fr.name = "fn" + path.substr(6, 1) + "_" + std::to_string(k);
            fr.start = static_cast<std::uint32_t>(10 * k + 1);
            if (coin(rng, 0.4)) fr.end = fr.start + 8;
            fc.functions.push_back(fr);
        }
        const auto max_line = 10 * max_functions + 5;
        for (std::uint32_t line = 1; line <= max_line; ++line) {
            if (!coin(rng, 0.5)) continue;
            std::uint64_t count = coin(rng, 0.4) ? 0 : uniform(rng, 1, 5);
            if (coin(rng, 0.03)) count = std::numeric_limits<std::uint64_t>::max() - uniform(rng, 0, 3);
            fc.line_counts[line] = count;
        }
        tf.files.emplace(path, std::move(fc));
    }
    return tf;
}

Tracefile reshuffle_counts(Rng& rng, const Tracefile& shape) {
    Tracefile out = shape;
    for (auto& [_, f] : out.files)
        for (auto& [line, count] : f.line_counts) count = coin(rng, 0.5) ? 0 : uniform(rng, 1, 9);
    return out;
}

ApiCatalog random_annotated_catalog(Rng& rng, std::size_t n) {
    ApiCatalog c = make_catalog("lib", random_api_names(rng, n));
    for (auto& [_, api] : c.apis) {
        if (coin(rng, 0.2)) continue;
        const std::uint64_t eloc = coin(rng, 0.1) ? 0 : uniform(rng, 1, 40);
        api.eloc = eloc;
        // Bias towards the bucket edges.
        switch (uniform(rng, 0, 3)) {
            case 0: api.covered_lines = eloc; break;
            case 1: api.covered_lines = eloc / 2; break;
            case 2: api.covered_lines = (eloc * 4) / 5; break;
            default: api.covered_lines = uniform(rng, 0, eloc); break;
        }
    }
    return c;
}

UseCounts random_use_counts(Rng& rng, const std::vector<std::string>& keys, double zero_p) {
    UseCounts out;
    for (const auto& k : keys) out[k] = coin(rng, zero_p) ? 0 : uniform(rng, 1, 20);
    return out;
}

int run_shell(const std::string& cmd, std::string* output) {
    FILE* p = popen((cmd + " 2>&1").c_str(), "r");
    if (!p) return -1;
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
    const int status = pclose(p);
    if (output) *output = std::move(out);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace apiprobe::testing
