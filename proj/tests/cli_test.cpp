#include <cstdio>
#include <string>
#include <vector>
#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string &args) {
    const std::string cmd = std::string(WAY_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE *p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string fixture(const std::string &name) { return std::string(FIXTURE_DIR) + "/" + name; }

}  // namespace

TEST(Cli, twirl) {
    const auto r = run("twirl " + fixture("e_plus.json"));
    ASSERT_EQ(r.code, 0);
    const auto j = json::parse(r.out);
    EXPECT_DOUBLE_EQ(j["distribution"]["0"].get<double>(), 0.5);
    EXPECT_DOUBLE_EQ(j["distribution"]["1"].get<double>(), 0.5);
    EXPECT_DOUBLE_EQ(j["frameness_entropy"].get<double>(), 1.0);

    const auto n3 = json::parse(run("twirl " + fixture("number_3.json")).out);
    EXPECT_DOUBLE_EQ(n3["distribution"]["3"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(n3["variance"].get<double>(), 0.0);

    EXPECT_EQ(run("twirl " + fixture("malformed.json")).code, 2);
    EXPECT_EQ(run("twirl " + fixture("does_not_exist.json")).code, 2);
}

TEST(Cli, convert) {
    const std::string src = fixture("uniform_0123.json");
    EXPECT_EQ(run("convert " + src + " " + fixture("pair_01.json")).code, 0);
    EXPECT_EQ(run("convert " + src + " " + fixture("pair_13.json")).code, 0);
    const auto no = run("convert " + src + " " + fixture("pair_03.json"));
    EXPECT_EQ(no.code, 1);
    EXPECT_FALSE(json::parse(no.out)["feasible"].get<bool>());
    EXPECT_EQ(run("convert " + src + " " + src).code, 0);

    const auto shift = run("convert " + fixture("pair_100_101.json") + " " + fixture("pair_01.json"));
    EXPECT_EQ(shift.code, 0);
    EXPECT_DOUBLE_EQ(json::parse(shift.out)["weights"]["-100"].get<double>(), 1.0);
    EXPECT_EQ(run("convert " + src).code, 2);
}

TEST(Cli, discriminate) {
    const auto r = run("discriminate " + fixture("uniform_readout.json"));
    ASSERT_EQ(r.code, 0);
    EXPECT_DOUBLE_EQ(json::parse(r.out)["discrimination"]["success_prob"].get<double>(), 0.75);

    const auto way = run("discriminate " + fixture("way_impossible.json"));
    EXPECT_EQ(way.code, 1);
    EXPECT_EQ(json::parse(way.out)["verdict"], "impossible");
    EXPECT_EQ(run("discriminate " + fixture("uniform_readout.json") + " --criterion xyz").code, 2);
}

TEST(Cli, curves) {
    const auto fig2 = run("curves fig2 --format csv --grid 1");
    ASSERT_EQ(fig2.code, 0);
    EXPECT_EQ(fig2.out.substr(0, fig2.out.find('\n')), "resource,param,mean_N,criterion,success_numeric,success_closed_form");
    char expected[64];
    std::snprintf(expected, sizeof expected, "%.12g", 1.0 - std::exp(-1.0) / 2.0);
    EXPECT_NE(fig2.out.find(std::string(",") + expected + "\n"), std::string::npos);
    EXPECT_NE(fig2.out.find("ozawa_reference,1,1,reference,,0.95\n"), std::string::npos);

    const auto fig3 = json::parse(run("curves fig3 --grid 1,8").out);
    ASSERT_EQ(fig3["rows"].size(), 6u);
    for (const auto &row : fig3["rows"]) EXPECT_TRUE(row.contains("ordering_flag"));

    EXPECT_EQ(run("curves fig9").code, 2);
    EXPECT_EQ(run("curves fig2 --grid ,").code, 2);
    EXPECT_EQ(run("curves fig3 --grid 0.3").code, 2);
    EXPECT_EQ(run("curves fig2 --format xml").code, 2);
}

TEST(Cli, circuit) {
    const auto ud = json::parse(run("circuit --kind ud --M 3 --input plus").out);
    EXPECT_DOUBLE_EQ(ud["outcomes"][0]["probability"].get<double>(), 0.75);
    EXPECT_DOUBLE_EQ(ud["outcomes"][2]["probability"].get<double>(), 0.25);
    EXPECT_DOUBLE_EQ(ud["verification"]["conservation_norm"].get<double>(), 0.0);

    const auto mle = json::parse(run("circuit --kind mle --M 3").out);
    EXPECT_DOUBLE_EQ(mle["equal_prior_success"].get<double>(), 0.875);

    const auto rep = json::parse(run("circuit --kind repeatable --M 2 --input minus").out);
    EXPECT_EQ(rep["outcomes"][1]["label"], "minus");
    EXPECT_DOUBLE_EQ(rep["outcomes"][1]["fidelity_e_minus"].get<double>(), 1.0);

    EXPECT_EQ(run("circuit --kind bogus").code, 2);
    EXPECT_EQ(run("circuit --kind ud --M 0").code, 2);
    EXPECT_EQ(run("circuit --kind ud --M three").code, 2);
}

TEST(Cli, circuit_manifest_round_trip) {
    const std::string path = std::string(::testing::TempDir()) + "way_cli_manifest.json";
    const auto direct = run("circuit --kind mle --M 2 --input minus --manifest-out " + path);
    ASSERT_EQ(direct.code, 0);
    const auto loaded = run("circuit --manifest " + path + " --input minus");
    ASSERT_EQ(loaded.code, 0);
    EXPECT_EQ(json::parse(direct.out)["outcomes"], json::parse(loaded.out)["outcomes"]);
    std::remove(path.c_str());
}

TEST(Cli, ozawa) {
    const auto commuting = json::parse(run("ozawa " + fixture("ozawa_commuting.json")).out);
    EXPECT_DOUBLE_EQ(commuting["noise"].get<double>(), 0.0);
    EXPECT_DOUBLE_EQ(commuting["bound"].get<double>(), 0.0);

    const auto ud = run("ozawa " + fixture("ozawa_ud.json"));
    ASSERT_EQ(ud.code, 0);
    const auto j = json::parse(ud.out);
    EXPECT_NEAR(j["bound"].get<double>(), 1.0 / 6.0, 1e-12);
    EXPECT_FALSE(j["violation"].get<bool>());
    EXPECT_GE(j["margin"].get<double>(), 0.0);

    const auto undefined = json::parse(run("ozawa " + fixture("ozawa_undefined.json")).out);
    EXPECT_EQ(undefined["bound"], "bound undefined");
    EXPECT_DOUBLE_EQ(undefined["noise"].get<double>(), 1.0);
}

TEST(Cli, deterministic_output) {
    for (const std::string &args : std::vector<std::string>{"curves fig3 --format csv", "circuit --kind repeatable --M 3 --input plus",
                                   "convert " + fixture("uniform_0123.json") + " " + fixture("pair_13.json")}) {
        const auto a = run(args), b = run(args);
        EXPECT_EQ(a.out, b.out) << args;
        EXPECT_FALSE(a.out.empty()) << args;
    }
}
