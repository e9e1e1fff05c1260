// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <string>

#include <unistd.h>

#include "bofnet/corpus.hpp"
#include "bofnet/error.hpp"
#include "bofnet/process.hpp"

namespace fs = std::filesystem;

namespace bofnet::corpus {

namespace {

constexpr std::string_view kProbeEntry = "probe_target";

std::string harness_source(const FunctionTemplate& t) {
  std::string src(program_prelude());
  src += '\n';
  src += t.definition(kProbeEntry);
  src += "\nint main(void)\n{\n";
  if (t.input == InputKind::Argument) {
    // Exact-size heap copy so over-reads of the argument are visible too.
    src +=
        "    static char raw[1 << 20];\n"
        "    size_t n = fread(raw, 1, sizeof(raw) - 1, stdin);\n"
        "    while (n > 0 && raw[n - 1] == '\\n') {\n"
        "        n--;\n"
        "    }\n"
        "    char *input = malloc(n + 1);\n"
        "    memcpy(input, raw, n);\n"
        "    input[n] = '\\0';\n"
        "    probe_target(input);\n"
        "    free(input);\n";
  } else {
    src += "    probe_target();\n";
  }
  src += "    return 0;\n}\n";
  return src;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("bofnet-probe-" + std::to_string(::getpid()) + "-" + tag);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

bool looks_like_overflow(const CommandResult& r) {
  return r.exit_code != 0 || r.timed_out || r.std_err.find("AddressSanitizer") != std::string::npos ||
         r.std_err.find("stack smashing") != std::string::npos;
}

}  // namespace

ValidationReport validate_template(const FunctionTemplate& t, const std::string& compiler) {
  if (!find_program(compiler)) {
    throw Error(ErrorCode::CompilerUnavailable, "template validation needs a C compiler (" + compiler + ")");
  }
  ValidationReport report;
  report.template_id = t.id;

  TempDir dir(t.id);
  auto src = dir.path / "harness.c";
  {
    std::ofstream out(src);
    out << harness_source(t);
  }

  auto syntax = run_command({compiler, "-std=gnu17", "-w", "-c", src.string(), "-o", (dir.path / "h.o").string()});
  report.compiles = syntax.exit_code == 0;
  if (!report.compiles) {
    report.diagnostics = syntax.std_err;
    return report;
  }

  auto exe = (dir.path / "harness").string();
  auto build = run_command(
      {compiler, "-std=gnu17", "-w", "-O0", "-g", "-fsanitize=address", "-fno-omit-frame-pointer", src.string(), "-o", exe});
  report.sanitizer = build.exit_code == 0;
  if (!report.sanitizer) {
    build = run_command({compiler, "-std=gnu17", "-w", "-O0", "-fstack-protector-all", src.string(), "-o", exe});
    if (build.exit_code != 0) {
      report.compiles = false;
      report.diagnostics = build.std_err;
      return report;
    }
  }

  for (auto multiplier : kProbeMultipliers) {
    ProbeResult probe;
    probe.multiplier = multiplier;
    probe.input_length = multiplier * t.buffer_size;
    std::string input(probe.input_length, 'A');
    input += '\n';
    auto run = run_command({exe}, input, std::chrono::seconds(10),
                           {{"ASAN_OPTIONS", "detect_leaks=0:abort_on_error=0:exitcode=86"}});
    probe.exit_code = run.exit_code;
    probe.overflow = looks_like_overflow(run);
    if (probe.overflow && report.diagnostics.empty()) {
      report.diagnostics = run.std_err.substr(0, 2000);
    }
    report.overflow_observed = report.overflow_observed || probe.overflow;
    report.probes.push_back(probe);
  }
  return report;
}

}  // namespace bofnet::corpus
