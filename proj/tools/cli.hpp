// SPDX-License-Identifier: Apache-2.0
// Shared pieces of the scanprop command-line tool.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scanprop/scan.hpp"

namespace scanprop::cli {

enum ExitCode : int { ok = 0, verification_failed = 1, usage_error = 2 };

/// Body of the selected subcommand.
using Action = std::function<int()>;

void add_gen_data(CLI::App& app, Action& action);
void add_train(CLI::App& app, Action& action);
void add_verify_jacobians(CLI::App& app, Action& action);
void add_bench_scan(CLI::App& app, Action& action);
void add_analyze(CLI::App& app, Action& action);

/// "linear", "blelloch", "hybrid" or "hybrid:<up>:<down>". Throws ConfigError.
scan::ExecutorConfig parse_executor_spec(const std::string& text);

/// Splits "a,b,c" (and repeated flags) into items.
std::vector<std::string> split_list(const std::vector<std::string>& items);

}  // namespace scanprop::cli
