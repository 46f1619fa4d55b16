#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <markov/analysis.hpp>
#include <markov/qi/verify.hpp>
#include <markov/rbim.hpp>
#include <markov/sweep.hpp>

using namespace markov;
namespace fs = std::filesystem;

namespace {

fs::path output_path(const ExperimentConfig& c, const char* fallback) { return c.out.empty() ? fs::path(fallback) : fs::path(c.out); }

fs::path sidecar(const fs::path& out) {
    fs::path s = out;
    return s.replace_extension(".json");
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream o(tmp);
        if (!o) throw std::runtime_error("cannot write " + tmp.string());
        o << j.dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

CsvTable table_for(const ExperimentConfig& c, std::vector<std::string> header) {
    CsvTable t;
    t.provenance = {"provenance: " + provenance_json(c).dump()};
    t.header = std::move(header);
    return t;
}

std::string row(std::initializer_list<std::string> fields) {
    std::string s;
    for (const auto& f : fields) s += (s.empty() ? "" : ",") + f;
    return s;
}

json fit_json(const DecayFit& f) {
    return {{"scale", f.scale}, {"stderr", f.stderr_}, {"amplitude", f.amplitude}, {"chi2", f.chi2}, {"n_used", f.n_used},
            {"dropped_r", f.dropped_r}};
}

// Perimeter of the plus of five plaquettes around (c, c), with the plus as hole.
Region plus_annulus(const Lattice& lat, int c) {
    std::vector<int> hole = {lat.plaquette(c, c), lat.plaquette(c + 1, c), lat.plaquette(c - 1, c), lat.plaquette(c, c + 1),
                             lat.plaquette(c, c - 1)};
    std::vector<int> perimeter;
    for (int e : edges_of_plaquettes(lat, hole)) {
        auto [a, b] = lat.edge_plaquettes(e);
        if ((std::find(hole.begin(), hole.end(), a) != hole.end()) != (std::find(hole.begin(), hole.end(), b) != hole.end()))
            perimeter.push_back(e);
    }
    return make_region(lat, perimeter, hole);
}

}  // namespace

int run_decay_fit(const ExperimentConfig& c) {
    const auto& P = c.params;
    const int min_r = P["min_r"].get<int>();
    auto recs = read_sweep(P["input"].get<std::string>());
    auto requested = P["p"].get<std::vector<double>>();
    const bool explicit_p = !requested.empty();
    auto ps = explicit_p ? requested : sweep_p_values(recs);

    auto table = table_for(c, {"p", "r", "cmi_bits", "stderr", "log_cmi", "log_stderr"});
    json fits = json::array();
    int failed = 0;
    for (double p : ps) {
        auto cmp = compare_decay(recs, p, min_r);
        for (const auto& pt : cmp.points) {
            const bool pos = pt.value > 0;
            table.rows.push_back(row({fmt_double(p), std::to_string(static_cast<int>(pt.r)), fmt_double(pt.value), fmt_double(pt.stderr_),
                                      pos ? fmt_double(std::log(pt.value)) : "nan", pos ? fmt_double(pt.stderr_ / pt.value) : "nan"}));
        }
        json f = {{"p", p}, {"strictly_decreasing", cmp.strictly_decreasing}, {"fitted", cmp.fitted}};
        if (cmp.fitted) {
            f["exponential"] = fit_json(cmp.exponential);
            f["power_law"] = fit_json(cmp.power_law);
            f["markov_length"] = cmp.exponential.scale;
            f["exponential_preferred"] = cmp.exponential_preferred();
            std::cout << "p=" << p << "  xi=" << cmp.exponential.scale << " +- " << cmp.exponential.stderr_
                      << "  chi2 exp=" << cmp.exponential.chi2 << " pow=" << cmp.power_law.chi2 << "\n";
        } else {
            f["error"] = cmp.error;
            std::cerr << "p=" << p << ": no fit (" << cmp.error << ")\n";
            failed += explicit_p;
        }
        fits.push_back(f);
    }
    const fs::path out = output_path(c, "decay_fit.csv");
    table.write(out);
    write_json(sidecar(out), {{"provenance", provenance_json(c)}, {"min_r", min_r}, {"fits", fits}});
    std::cout << "wrote " << out.string() << " and " << sidecar(out).string() << "\n";
    return failed == 0 ? 0 : 1;
}

int run_collapse(const ExperimentConfig& c) {
    const auto& P = c.params;
    auto window = P["p_window"].get<std::array<double, 2>>();
    CollapseRanges box;
    box.p_c = P["p_c"].get<std::array<double, 2>>();
    box.nu = P["nu"].get<std::array<double, 2>>();
    box.alpha = P["alpha"].get<std::array<double, 2>>();
    box.grid = P["grid"].get<int>();
    auto pts = collapse_points(read_sweep(P["input"].get<std::string>()), window[0], window[1], P["min_r"].get<int>());
    auto fit = collapse_fit(pts, box);

    auto table = table_for(c, {"r", "p", "x", "y", "sigma"});
    const auto canon = canonical_points(pts);
    const auto scaled = collapse_transform(canon, fit.p_c, fit.nu, fit.alpha);
    for (std::size_t k = 0; k < canon.size(); ++k)
        table.rows.push_back(row({std::to_string(canon[k].r), fmt_double(canon[k].p), fmt_double(scaled[k].x), fmt_double(scaled[k].y),
                                  fmt_double(scaled[k].sigma)}));
    const fs::path out = output_path(c, "collapse.csv");
    table.write(out);
    json res = {{"p_c", fit.p_c}, {"nu", fit.nu}, {"alpha", fit.alpha}, {"quality", fit.quality},
                {"n_compared", fit.n_compared}, {"n_points", canon.size()}, {"reliable", fit.reliable}};
    write_json(sidecar(out), {{"provenance", provenance_json(c)}, {"collapse", res}});
    std::cout << "p_c=" << fit.p_c << " nu=" << fit.nu << " alpha=" << fit.alpha << " quality=" << fit.quality
              << (fit.reliable ? "" : " (unreliable: too few overlapping points)") << "\n";
    return fit.reliable ? 0 : 1;
}

int run_exact_verify(const ExperimentConfig& c) {
    const auto& P = c.params;
    qi::VerifyOptions opt;
    opt.p = P["p"].get<std::vector<double>>();
    opt.bound_trials = P["bound_trials"].get<int>();
    opt.petz_trials = P["petz_trials"].get<int>();
    opt.seed = c.seed;
    auto report = qi::exact_verify(opt);
    for (const auto& s : report["sections"])
        std::cout << (s["ok"].get<bool>() ? "ok   " : "FAIL ") << s["name"].get<std::string>() << "  " << s["passed"] << "/"
                  << s["trials"] << "  worst " << s["worst"] << "\n";
    const fs::path out = output_path(c, "exact_verify.json");
    write_json(out, {{"provenance", provenance_json(c)}, {"report", report}});
    std::cout << "wrote " << out.string() << "\n";
    return report["ok"].get<bool>() ? 0 : 1;
}

int run_rbim_check(const ExperimentConfig& c) {
    const auto& P = c.params;
    const auto ps = P["p"].get<std::vector<double>>();
    const auto xs = P["x"].get<std::vector<int>>();
    const long n = P["n_disorder"].get<long>();
    const auto engine_name = P["engine"].get<std::string>();
    const auto engine = rbim_engine_from_string(engine_name);

    // Entropy / free-energy identity on regions small enough to enumerate.
    json checks = json::array();
    int failed = 0;
    Lattice lat(8);
    auto block = make_region(lat, edges_of_plaquettes(lat, {lat.plaquette(3, 3), lat.plaquette(4, 3), lat.plaquette(3, 4), lat.plaquette(4, 4)}));
    std::vector<std::pair<std::string, Region>> regions = {{"plaquette", make_region(lat, edges_of_plaquettes(lat, {lat.plaquette(3, 3)}))},
                                                           {"block_2x2", block},
                                                           {"plus_annulus", plus_annulus(lat, 4)}};
    for (double p : ps)
        for (const auto& [name, q] : regions) {
            auto r = entropy_freeenergy_check(lat, q, p, engine);
            const bool ok = r.abs_diff() <= 1e-8;
            failed += !ok;
            checks.push_back({{"region", name}, {"edges", q.edges.size()}, {"p", p}, {"entropy_nats", r.entropy_nats},
                              {"free_energy_nats", r.free_energy}, {"rhs_nats", r.rhs}, {"abs_diff", r.abs_diff()}, {"ok", ok}});
            std::cout << (ok ? "ok   " : "FAIL ") << name << " p=" << p << "  |H ln2 - (F + c1|Q| + c2)| = " << r.abs_diff() << "\n";
        }

    auto table = table_for(c, {"x", "p", "F_def_mean_nats", "stderr", "n_disorder", "engine", "seed"});
    std::map<std::pair<int, double>, DefectFreeEnergy> fdef;
    for (double p : ps)
        for (int x : xs) {
            auto d = defect_free_energy(x, p, n, c.seed, engine, c.threads);
            fdef[{x, p}] = d;
            table.rows.push_back(row({std::to_string(x), fmt_double(p), fmt_double(d.mean), fmt_double(d.stderr_), std::to_string(n),
                                      engine_name, std::to_string(c.seed)}));
        }
    // CMI at buffer r from the defect costs of the (2r+1) and (4r+1) patches.
    json cmi = json::array();
    for (double p : ps)
        for (int x : xs) {
            auto hi = fdef.find({2 * x - 1, p});
            if (hi == fdef.end()) continue;
            const auto& lo = fdef.at({x, p});
            cmi.push_back({{"r", (x - 1) / 2}, {"p", p}, {"cmi_bits", (hi->second.mean - lo.mean) / std::log(2.0)},
                           {"stderr_bits", std::hypot(hi->second.stderr_, lo.stderr_) / std::log(2.0)}});
        }

    const fs::path out = output_path(c, "rbim_check.csv");
    table.write(out);
    write_json(sidecar(out), {{"provenance", provenance_json(c)}, {"entropy_free_energy", checks}, {"cmi_from_defects", cmi}});
    std::cout << "wrote " << out.string() << " and " << sidecar(out).string() << "\n";
    return failed == 0 ? 0 : 1;
}

int run_reversal_demo(const ExperimentConfig& c) {
    const auto& P = c.params;
    const int n = P["n_sites"].get<int>(), r = P["r"].get<int>();
    const double dt = P["dt"].get<double>(), gamma = P["gamma"].get<double>();
    auto d = qi::reversal_demo(n, dt, gamma, r);
    json gates = json::array();
    std::size_t k = 0;
    for (std::size_t l = 0; l < d.forward.layers.size(); ++l)
        for (const auto& g : d.forward.layers[l]) gates.push_back({{"layer", l}, {"support", g.support()}, {"error", d.error.per_gate.at(k++)}});
    const bool ok = d.error.holds() && d.cptp_failures == 0;
    json res = {{"n_sites", n}, {"dt", dt}, {"trotter_steps", qi::trotter_steps(dt)}, {"gamma", gamma}, {"r", r},
                {"layers", d.forward.layers.size()}, {"min_separation", d.forward.min_separation(qi::ChainMetric{n, true})},
                {"epsilon", d.error.epsilon}, {"bound", d.error.bound}, {"holds", d.error.holds()},
                {"reversal_gates_not_cptp", d.cptp_failures}, {"gates", gates}};
    const fs::path out = output_path(c, "reversal_demo.json");
    write_json(out, {{"provenance", provenance_json(c)}, {"reversal", res}});
    std::cout << "epsilon=" << d.error.epsilon << " bound=" << d.error.bound << (ok ? "" : "  FAILED") << "\nwrote " << out.string() << "\n";
    return ok ? 0 : 1;
}
