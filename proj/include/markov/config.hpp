#pragma once

// Experiment configuration: a JSON object with a "kind" and the parameters
// of that kind. Unknown keys are errors; defaults are filled in so that the
// normalized config round-trips and can be embedded in every output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "version.hpp"

namespace markov {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

enum class FieldType { Int, UInt, Number, String, Bool, IntList, NumberList, NumberPair };

struct Field {
    std::string name;
    FieldType type;
    json default_value;  // null means required
    std::function<void(const std::string& path, const json& v)> check = {};
};

inline const char* type_name(FieldType t) {
    switch (t) {
        case FieldType::Int: return "an integer";
        case FieldType::UInt: return "a nonnegative integer";
        case FieldType::Number: return "a number";
        case FieldType::String: return "a string";
        case FieldType::Bool: return "a boolean";
        case FieldType::IntList: return "a list of integers";
        case FieldType::NumberList: return "a list of numbers";
        case FieldType::NumberPair: return "a list of two numbers";
    }
    return "?";
}

inline bool type_ok(FieldType t, const json& v) {
    switch (t) {
        case FieldType::Int: return v.is_number_integer();
        case FieldType::UInt: return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
        case FieldType::Number: return v.is_number();
        case FieldType::String: return v.is_string();
        case FieldType::Bool: return v.is_boolean();
        case FieldType::IntList:
            return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number_integer(); });
        case FieldType::NumberList:
            return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); });
        case FieldType::NumberPair:
            return v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number();
    }
    return false;
}

inline auto positive() {
    return [](const std::string& path, const json& v) {
        if (v.get<double>() <= 0) throw ConfigError(path + ": must be positive");
    };
}

inline auto at_least(double lo) {
    return [lo](const std::string& path, const json& v) {
        if (v.get<double>() < lo) throw ConfigError(path + ": must be >= " + std::to_string(lo));
    };
}

inline auto each(std::function<void(const std::string&, double)> f, bool nonempty = true) {
    return [f, nonempty](const std::string& path, const json& v) {
        if (nonempty && v.empty()) throw ConfigError(path + ": must not be empty");
        for (std::size_t k = 0; k < v.size(); ++k) f(path + "[" + std::to_string(k) + "]", v[k].get<double>());
    };
}

inline void dephasing_p(const std::string& path, double p) {
    if (!(p >= 0.0 && p <= 0.5)) throw ConfigError(path + ": dephasing probability must lie in [0, 0.5]");
}

inline void open_p(const std::string& path, double p) {
    if (!(p > 0.0 && p <= 0.5)) throw ConfigError(path + ": probability must lie in (0, 0.5]");
}

inline auto ordered_pair(std::function<void(const std::string&, double)> f = {}) {
    return [f](const std::string& path, const json& v) {
        if (!(v[0].get<double>() < v[1].get<double>())) throw ConfigError(path + ": lower bound must be below upper bound");
        if (f) {
            f(path + "[0]", v[0].get<double>());
            f(path + "[1]", v[1].get<double>());
        }
    };
}

inline const std::map<std::string, std::vector<Field>>& schemas() {
    using T = FieldType;
    static const std::map<std::string, std::vector<Field>> s = {
        {"cmi-sweep",
         {{"L", T::Int, 24, at_least(6)},
          {"r", T::IntList, json::array({1, 2, 3, 4}), each([](const std::string& p, double v) {
               if (v < 1) throw ConfigError(p + ": buffer width must be >= 1");
           })},
          {"p", T::NumberList, json::array({0.0, 0.05, 0.11, 0.15, 0.5}), each(dephasing_p)},
          {"n_samples", T::Int, 35000, at_least(100)},
          {"chi", T::Int, 64, at_least(2)},
          {"cutoff", T::Number, 1e-12, at_least(0)}}},
        {"decay-fit",
         {{"input", T::String, json()},
          {"p", T::NumberList, json::array(), each(dephasing_p, false)},
          {"min_r", T::Int, 2, at_least(1)}}},
        {"collapse",
         {{"input", T::String, json()},
          {"p_window", T::NumberPair, json::array({0.07, 0.15}), ordered_pair(dephasing_p)},
          {"min_r", T::Int, 1, at_least(1)},
          {"p_c", T::NumberPair, json::array({0.08, 0.14}), ordered_pair(open_p)},
          {"nu", T::NumberPair, json::array({0.5, 4.0}), ordered_pair([](const std::string& p, double v) {
               if (v <= 0) throw ConfigError(p + ": must be positive");
           })},
          {"alpha", T::NumberPair, json::array({0.0, 3.0}), ordered_pair()},
          {"grid", T::Int, 21, at_least(3)}}},
        {"exact-verify",
         {{"p", T::NumberList, json::array({0.1, 0.25, 0.4}), each(dephasing_p)},
          {"bound_trials", T::Int, 200, at_least(1)},
          {"petz_trials", T::Int, 100, at_least(1)}}},
        {"rbim-check",
         {{"p", T::NumberList, json::array({0.05, 0.11, 0.2}), each(open_p)},
          {"x", T::IntList, json::array({3, 5}), each([](const std::string& p, double v) {
               if (v < 3 || static_cast<long long>(v) % 2 == 0) throw ConfigError(p + ": patch size must be odd and >= 3");
           })},
          {"n_disorder", T::Int, 2000, at_least(1)},
          {"engine", T::String, "transfer", [](const std::string& p, const json& v) {
               if (v != "enumerate" && v != "transfer") throw ConfigError(p + ": must be \"enumerate\" or \"transfer\"");
           }}}},
        {"reversal-demo",
         {{"n_sites", T::Int, 6, [](const std::string& p, const json& v) {
               if (v.get<int>() < 3 || v.get<int>() > 8) throw ConfigError(p + ": ring size must lie in [3, 8]");
           }},
          {"dt", T::Number, 0.5, [](const std::string& p, const json& v) {
               const double dt = v.get<double>();
               if (!(dt > 0 && dt <= 1)) throw ConfigError(p + ": must lie in (0, 1]");
               if (std::abs(1.0 / dt - std::round(1.0 / dt)) > 1e-9) throw ConfigError(p + ": 1/dt must be an integer number of steps");
           }},
          {"gamma", T::Number, 0.2, at_least(0)},
          {"r", T::Int, 1, at_least(0)}}},
    };
    return s;
}

}  // namespace detail

struct ExperimentConfig {
    std::string kind;
    std::uint64_t seed = 1;
    std::string out;
    int threads = 1;
    bool resume = false;
    json params;  // kind-specific, normalized with defaults

    json to_json() const {
        json j = params;
        j["kind"] = kind;
        j["seed"] = seed;
        j["out"] = out;
        j["threads"] = threads;
        j["resume"] = resume;
        return j;
    }
};

inline std::vector<std::string> experiment_kinds() {
    std::vector<std::string> k;
    for (const auto& [name, _] : detail::schemas()) k.push_back(name);
    return k;
}

/// Validate and normalize. Errors name the offending field as config.<key>.
inline ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config: must be a JSON object");
    if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("config.kind: required string");
    ExperimentConfig c;
    c.kind = j["kind"].get<std::string>();
    auto it = detail::schemas().find(c.kind);
    if (it == detail::schemas().end()) {
        std::string known;
        for (const auto& k : experiment_kinds()) known += (known.empty() ? "" : ", ") + k;
        throw ConfigError("config.kind: unknown experiment '" + c.kind + "' (expected one of " + known + ")");
    }
    const auto& fields = it->second;
    static const std::vector<std::string> common = {"kind", "seed", "out", "threads", "resume"};
    for (const auto& [key, _] : j.items()) {
        bool known = std::find(common.begin(), common.end(), key) != common.end() ||
                     std::any_of(fields.begin(), fields.end(), [&](const detail::Field& f) { return f.name == key; });
        if (!known) throw ConfigError("config." + key + ": unknown key for kind '" + c.kind + "'");
    }
    if (j.contains("seed")) {
        if (!detail::type_ok(detail::FieldType::UInt, j["seed"])) throw ConfigError("config.seed: must be a nonnegative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("out")) {
        if (!j["out"].is_string()) throw ConfigError("config.out: must be a string");
        c.out = j["out"].get<std::string>();
    }
    if (j.contains("threads")) {
        if (!j["threads"].is_number_integer() || j["threads"].get<int>() < 1) throw ConfigError("config.threads: must be a positive integer");
        c.threads = j["threads"].get<int>();
    }
    if (j.contains("resume")) {
        if (!j["resume"].is_boolean()) throw ConfigError("config.resume: must be a boolean");
        c.resume = j["resume"].get<bool>();
    }
    c.params = json::object();
    for (const auto& f : fields) {
        const std::string path = "config." + f.name;
        json v;
        if (j.contains(f.name)) {
            v = j[f.name];
            if (!detail::type_ok(f.type, v)) throw ConfigError(path + ": must be " + detail::type_name(f.type));
        } else if (f.default_value.is_null()) {
            throw ConfigError(path + ": required");
        } else {
            v = f.default_value;
        }
        if (f.check) f.check(path, v);
        c.params[f.name] = v;
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

/// Provenance block embedded in every output. Thread count and the resume
/// flag do not affect results and are left out, so resumed and uninterrupted
/// runs produce identical files.
inline json provenance_json(const ExperimentConfig& c) {
    json cfg = c.to_json();
    cfg.erase("threads");
    cfg.erase("resume");
    return json{{"config", cfg}, {"version", kVersion}};
}

}  // namespace markov
