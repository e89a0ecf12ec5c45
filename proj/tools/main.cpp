// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <exception>

#include <fmt/format.h>

#include "cli.hpp"
#include "scanprop/error.hpp"

namespace scanprop::cli {

scan::ExecutorConfig parse_executor_spec(const std::string& text) {
    scan::ExecutorConfig e;
    const auto colon = text.find(':');
    e.kind = scan::parse_executor(text.substr(0, colon));
    if (colon == std::string::npos)
        return e;
    if (e.kind != scan::Executor::hybrid)
        throw ConfigError(fmt::format("only hybrid takes levels, got '{}'", text));
    const auto second = text.find(':', colon + 1);
    if (second == std::string::npos)
        throw ConfigError(fmt::format("expected hybrid:<up>:<down>, got '{}'", text));
    try {
        std::size_t used = 0;
        const std::string up = text.substr(colon + 1, second - colon - 1), down = text.substr(second + 1);
        e.up_levels = std::stoul(up, &used);
        if (used != up.size())
            throw ConfigError("");
        e.down_levels = std::stoul(down, &used);
        if (used != down.size())
            throw ConfigError("");
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("expected hybrid:<up>:<down>, got '{}'", text));
    }
    return e;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (const auto& item : items) {
        std::size_t start = 0;
        while (start <= item.size()) {
            const auto comma = item.find(',', start);
            const auto piece = item.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!piece.empty())
                out.push_back(piece);
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
    }
    return out;
}

}  // namespace scanprop::cli

int main(int argc, char** argv) {
    using namespace scanprop::cli;
    CLI::App app{"Back-propagation as a parallel scan: data generation, training, Jacobian checks, benchmarks"};
    app.require_subcommand(1);
    Action action;
    add_gen_data(app, action);
    add_train(app, action);
    add_verify_jacobians(app, action);
    add_bench_scan(app, action);
    add_analyze(app, action);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : usage_error;
    }
    try {
        return action ? action() : usage_error;
    } catch (const scanprop::ConfigError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return usage_error;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return verification_failed;
    }
}
