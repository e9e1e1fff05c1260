// SPDX-License-Identifier: Apache-2.0
#include "bofnet/process.hpp"

#include <boost/asio.hpp>
#include <boost/process.hpp>
#include <filesystem>
#include <csignal>
#include <future>

#include "bofnet/error.hpp"

namespace bp = boost::process;

namespace bofnet {

std::optional<std::string> find_program(const std::string& name) {
  if (name.find('/') != std::string::npos) {
    if (std::filesystem::exists(name)) return name;
    return std::nullopt;
  }
  auto found = bp::search_path(name);
  if (found.empty()) return std::nullopt;
  return found.string();
}

CommandResult run_command(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds timeout,
                          const std::vector<std::pair<std::string, std::string>>& env) {
  // A child that exits before draining stdin must not take us down with it.
  static const bool sigpipe_ignored = [] { return std::signal(SIGPIPE, SIG_IGN) != SIG_ERR; }();
  (void)sigpipe_ignored;
  if (argv.empty()) throw Error(ErrorCode::InvalidArgument, "empty command line");
  auto exe = find_program(argv[0]);
  if (!exe) throw Error(ErrorCode::CompilerNotFound, "program not found: " + argv[0]);

  std::vector<std::string> args(argv.begin() + 1, argv.end());
  auto environment = boost::this_process::environment();
  bp::environment child_env = environment;
  for (const auto& [key, value] : env) child_env[key] = value;

  boost::asio::io_context ctx;
  std::future<std::string> out;
  std::future<std::string> err;
  bp::async_pipe in_pipe(ctx);
  CommandResult result;
  std::error_code ec;
  bp::child child(*exe, bp::args(args), bp::std_in < in_pipe, bp::std_out > out,
                  bp::std_err > err, child_env, ctx, ec);
  if (ec) throw Error(ErrorCode::CompilerNotFound, "failed to launch " + *exe + ": " + ec.message());

  boost::asio::async_write(in_pipe, boost::asio::buffer(input),
                           [&](const boost::system::error_code&, std::size_t) { in_pipe.close(); });
  ctx.run_for(timeout);
  if (child.running() && !child.wait_for(std::chrono::milliseconds(10))) {
    child.terminate();
    result.timed_out = true;
  }
  child.wait();
  ctx.run();
  result.exit_code = child.exit_code();
  if (child.native_exit_code() != 0 && WIFSIGNALED(child.native_exit_code())) {
    result.exit_code = 128 + WTERMSIG(child.native_exit_code());
  }
  result.std_out = out.get();
  result.std_err = err.get();
  return result;
}

}  // namespace bofnet
