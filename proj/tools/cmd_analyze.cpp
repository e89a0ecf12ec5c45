// SPDX-License-Identifier: Apache-2.0
// analyze: static FLOP reports for a layer chain.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include <fmt/format.h>

#include "cli.hpp"
#include "scanprop/analysis.hpp"
#include "scanprop/error.hpp"

namespace scanprop::cli {

namespace {

struct AnalyzeArgs {
    std::string preset;
    std::string chain;
    std::string prune;
    std::string prune_mask;
    std::uint64_t prune_seed = 1;
    std::vector<std::string> executors{"linear,blelloch"};
    bool sweep = false;
    std::string out;
};

analysis::PruneOptions parse_prune(const AnalyzeArgs& a) {
    analysis::PruneOptions p;
    p.seed = a.prune_seed;
    if (!a.prune.empty()) {
        const std::string key = "density=";
        if (a.prune.rfind(key, 0) != 0)
            throw ConfigError(fmt::format("--prune expects density=<d>, got '{}'", a.prune));
        const std::string value = a.prune.substr(key.size());
        std::size_t used = 0;
        double d = -1.0;
        try {
            d = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != value.size() || !(d >= 0.0 && d <= 1.0))
            throw ConfigError(fmt::format("--prune density must lie in [0, 1], got '{}'", value));
        p.density = d;
    }
    if (!a.prune_mask.empty())
        p.masks = analysis::load_masks(a.prune_mask);
    return p;
}

int run_analyze(const AnalyzeArgs& a) {
    if (a.preset.empty() == a.chain.empty())
        throw ConfigError("give exactly one of --preset and --chain");
    analysis::ChainSpec chain;
    if (!a.preset.empty()) {
        if (a.preset != "vgg11-conv")
            throw ConfigError(fmt::format("unknown preset '{}' (available: vgg11-conv)", a.preset));
        chain = analysis::ChainSpec::vgg11_conv();
    } else {
        chain = analysis::ChainSpec::load(a.chain);
    }
    chain.validate();
    const auto prune = parse_prune(a);

    std::vector<analysis::FlopReport> reports;
    for (const auto& s : split_list(a.executors))
        reports.push_back(analysis::flops_of_chain(chain, parse_executor_spec(s), prune));

    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out);
        if (!file)
            throw Error(fmt::format("cannot write {}", a.out));
    }
    analysis::write_flop_csv(a.out.empty() ? std::cout : file, reports);
    auto* summary = a.out.empty() ? stderr : stdout;
    for (const auto& r : reports)
        fmt::print(summary, "{}: {} steps, max step {} FLOP, critical path {} FLOP, total {} FLOP\n", r.executor,
                   r.records.size(), r.max_step_flop(), r.critical_path_flop(), r.total_flop());

    if (a.sweep) {
        const auto jac = analysis::build_chain_jacobians<float>(chain, prune);
        std::vector<sparse::PatternPtr> patterns;
        for (const auto& j : jac)
            patterns.push_back(j.shared_pattern());
        const auto best = analysis::sweep_levels(patterns);
        fmt::print(summary, "best levels: up {} down {} (critical path {} FLOP)\n", best.up_levels, best.down_levels,
                   best.critical_path_flop);
    }
    return ok;
}

}  // namespace

void add_analyze(CLI::App& app, Action& action) {
    auto a = std::make_shared<AnalyzeArgs>();
    auto* cmd = app.add_subcommand("analyze", "Static per-step FLOP report for a layer chain");
    cmd->add_option("--preset", a->preset, "Built-in chain: vgg11-conv");
    cmd->add_option("--chain", a->chain, "Chain file (conv3x3/relu/maxpool/dense lines)");
    cmd->add_option("--prune", a->prune, "density=<d>: keep each conv/dense weight with probability d");
    cmd->add_option("--prune-mask", a->prune_mask, "One 0/1 mask line per prunable layer");
    cmd->add_option("--prune-seed", a->prune_seed)->capture_default_str();
    cmd->add_option("--executor", a->executors, "linear, blelloch, hybrid:<up>:<down> (comma list)")
        ->capture_default_str();
    cmd->add_flag("--sweep-levels", a->sweep, "Report the hybrid levels with the least critical-path FLOP");
    cmd->add_option("--out", a->out, "CSV path (stdout when absent)");
    cmd->callback([a, &action] { action = [a] { return run_analyze(*a); }; });
}

}  // namespace scanprop::cli
