#include <gtest/gtest.h>

#include <markov/config.hpp>

using namespace markov;

namespace {

std::string error_of(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, DefaultsAreFilledAndRoundTrip) {
    auto c = parse_config({{"kind", "cmi-sweep"}, {"seed", 5}, {"p", {0.1, 0.2}}});
    EXPECT_EQ(c.params["L"], 24);
    EXPECT_EQ(c.params["n_samples"], 35000);
    EXPECT_EQ(c.params["r"], json({1, 2, 3, 4}));
    EXPECT_EQ(c.seed, 5u);
    auto again = parse_config(c.to_json());
    EXPECT_EQ(again.to_json(), c.to_json());
    for (const auto& kind : experiment_kinds()) {
        json j = {{"kind", kind}};
        if (kind == "decay-fit" || kind == "collapse") j["input"] = "x.csv";
        auto k = parse_config(j);
        EXPECT_EQ(parse_config(k.to_json()).to_json(), k.to_json()) << kind;
    }
}

TEST(Config, ErrorsNameTheField) {
    EXPECT_EQ(error_of({{"kind", "cmi-sweep"}, {"p_grid", {0.1}}}), "config.p_grid: unknown key for kind 'cmi-sweep'");
    EXPECT_EQ(error_of({{"kind", "cmi-sweep"}, {"p", {0.1, 0.7}}}), "config.p[1]: dephasing probability must lie in [0, 0.5]");
    EXPECT_EQ(error_of({{"kind", "cmi-sweep"}, {"L", "24"}}), "config.L: must be an integer");
    EXPECT_EQ(error_of({{"kind", "cmi-sweep"}, {"r", json::array()}}), "config.r: must not be empty");
    EXPECT_EQ(error_of({{"kind", "decay-fit"}}), "config.input: required");
    EXPECT_EQ(error_of({{"kind", "rbim-check"}, {"x", {3, 4}}}), "config.x[1]: patch size must be odd and >= 3");
    EXPECT_EQ(error_of({{"kind", "collapse"}, {"input", "a"}, {"nu", {2.0, 1.0}}}), "config.nu: lower bound must be below upper bound");
    EXPECT_EQ(error_of({{"kind", "reversal-demo"}, {"dt", 0.3}}), "config.dt: 1/dt must be an integer number of steps");
    EXPECT_EQ(error_of({{"kind", "reversal-demo"}, {"layers", 2}}), "config.layers: unknown key for kind 'reversal-demo'");
    EXPECT_EQ(error_of({{"kind", "cmi-sweep"}, {"seed", -1}}), "config.seed: must be a nonnegative integer");
    EXPECT_EQ(error_of({{"kind", "cmi-sweep"}, {"threads", 0}}), "config.threads: must be a positive integer");
    EXPECT_NE(error_of({{"kind", "plot"}}).find("unknown experiment 'plot'"), std::string::npos);
    EXPECT_EQ(error_of(json::array()), "config: must be a JSON object");
}

TEST(Config, ProvenanceIgnoresThreadsAndResume) {
    auto a = parse_config({{"kind", "exact-verify"}, {"threads", 1}});
    auto b = parse_config({{"kind", "exact-verify"}, {"threads", 4}, {"resume", true}});
    EXPECT_EQ(provenance_json(a), provenance_json(b));
    EXPECT_EQ(provenance_json(a)["version"], kVersion);
    auto c = parse_config({{"kind", "exact-verify"}, {"seed", 2}});
    EXPECT_NE(provenance_json(a), provenance_json(c));
}
