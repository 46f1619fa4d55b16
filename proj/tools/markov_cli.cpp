// markov: command-line driver for the experiments.
//
//   markov <subcommand> --config cfg.json [--seed N] [--out PATH] [--resume] [--threads N]
//
// Exit status is 0 only when every check of the run passes.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <markov/config.hpp>
#include <markov/sweep.hpp>

#include "commands.hpp"

using namespace markov;

namespace {

int run_cmi_sweep(const ExperimentConfig& c) {
    const auto& P = c.params;
    SweepSpec s;
    s.L = P["L"].get<int>();
    s.r_list = P["r"].get<std::vector<int>>();
    s.p_grid = P["p"].get<std::vector<double>>();
    s.n_samples = P["n_samples"].get<long>();
    s.chi = P["chi"].get<int>();
    s.cutoff = P["cutoff"].get<double>();
    s.seed = c.seed;
    s.threads = c.threads;
    const std::filesystem::path out = c.out.empty() ? "cmi_sweep.csv" : c.out;

    CsvTable table;
    table.provenance = {"provenance: " + provenance_json(c).dump()};
    table.header = sweep_columns();
    std::map<std::string, std::string> done;
    if (c.resume && std::filesystem::exists(out)) {
        auto old = CsvTable::read(out);
        if (old.provenance != table.provenance)
            throw ConfigError(out.string() + ": existing table was produced by a different config; refusing to resume");
        for (const auto& row : old.rows) {
            auto rec = parse_sweep_row(row);
            if (rec.ok()) done[cell_key(rec.r, rec.p)] = row;
        }
        std::cerr << "resuming: " << done.size() << " completed cells reused\n";
    }
    auto rows = sweep(s, done, [&](const std::vector<std::string>& partial) {
        table.rows = partial;
        table.write(out);
        std::cerr << "cmi-sweep: " << partial.size() << "/" << s.r_list.size() * s.p_grid.size() << " cells\n";
    });
    table.rows = rows;
    table.write(out);

    int failed = 0;
    for (const auto& row : rows) {
        auto rec = parse_sweep_row(row);
        if (!rec.ok()) {
            ++failed;
            std::cerr << "cell r=" << rec.r << " p=" << rec.p << " " << rec.status << "\n";
        } else if (rec.cmi < -3.0 * rec.stderr_) {
            ++failed;
            std::cerr << "cell r=" << rec.r << " p=" << rec.p << " violates strong subadditivity: " << rec.cmi << " +- "
                      << rec.stderr_ << "\n";
        }
    }
    std::cout << "wrote " << out.string() << " (" << rows.size() << " cells, " << failed << " flagged)\n";
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Markov length of the dephased toric code: estimators and exact checks"};
    app.require_subcommand(1);
    std::string config_path, out;
    std::uint64_t seed = 0;
    bool resume = false;
    int threads = 0;
    std::map<std::string, CLI::App*> subs;
    for (const auto& kind : experiment_kinds()) {
        auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
        sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out, "output path");
        sub->add_flag("--resume", resume, "reuse completed cells of an existing output");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        subs[kind] = sub;
    }
    CLI11_PARSE(app, argc, argv);

    try {
        std::string kind;
        for (const auto& [name, sub] : subs)
            if (sub->parsed()) kind = name;
        auto j = json::parse(std::ifstream(config_path));
        if (j.is_object() && !j.contains("kind")) j["kind"] = kind;
        auto c = parse_config(j);
        if (c.kind != kind) throw ConfigError("config.kind: '" + c.kind + "' does not match subcommand '" + kind + "'");
        if (subs[kind]->count("--seed")) c.seed = seed;
        if (!out.empty()) c.out = out;
        if (resume) c.resume = true;
        if (threads > 0) c.threads = threads;

        if (kind == "cmi-sweep") return run_cmi_sweep(c);
        if (kind == "decay-fit") return run_decay_fit(c);
        if (kind == "collapse") return run_collapse(c);
        if (kind == "exact-verify") return run_exact_verify(c);
        if (kind == "rbim-check") return run_rbim_check(c);
        if (kind == "reversal-demo") return run_reversal_demo(c);
        throw ConfigError("unhandled experiment kind " + kind);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
