#include <doctest.h>

#include "benchmark_rows.hpp"
#include "ecol2/cli.hpp"
#include "ecol2/csv.hpp"
#include "ecol2/ledger.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

using namespace ecol2;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ecol2_cli_" + name);
    fs::remove_all(p);
    return p;
}

csv::Table table_of(const Run& r) {
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return csv::parse(r.out);
}

double num(const csv::Table& t, std::size_t row, const std::string& column) {
    const int c = t.column(column);
    REQUIRE(c >= 0);
    return csv::parse_double(t.rows.at(row).at(c));
}

std::string cell(const csv::Table& t, std::size_t row, const std::string& column) {
    const int c = t.column(column);
    REQUIRE(c >= 0);
    return t.rows.at(row).at(c);
}

/// Ledger whose per-stage totals equal a published row; the embodied stage exists only if nonzero.
fs::path fixture_ledger(const fixtures::BenchmarkRow& row, const std::string& name) {
    const fs::path root = fresh_dir(name);
    LedgerStore store(root);
    store.lock_for_writing();
    const std::pair<Stage, double> parts[] = {{Stage::embodied, row.c_e},
                                              {Stage::developmental, row.c_d},
                                              {Stage::operational, row.c_o},
                                              {Stage::inference, row.c_i}};
    for (auto [stage, kg] : parts) {
        if (kg == 0.0) continue;
        EmissionRecord r;
        r.stage = stage;
        r.label = "fixture";
        r.region = "CH";
        r.emissions_kg = kg;
        store.record(r);
    }
    return root;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("track persists a record with the synthetic power") {
    const fs::path root = fresh_dir("track");
    const auto t = table_of(run({"--region", "CH", "--power", "fixed:50", "--ledger", root.string(), "--format",
                                 "csv", "track", "--stage", "operational", "--", "sleep", "0.2"}));
    const double d = num(t, 0, "duration_s");
    CHECK(d >= 0.2);
    CHECK(d < 5.0);
    CHECK(num(t, 0, "energy_kwh") == doctest::Approx(50 * d / 3.6e6).epsilon(1e-12));
    CHECK(num(t, 0, "emissions_kg") == doctest::Approx(50 * d / 3.6e6 * 34.84 / 1000).epsilon(1e-12));
    CHECK(cell(t, 0, "label") == "sleep");
    CHECK(cell(t, 0, "failed") == "false");
    LedgerStore store(root);
    CHECK(store.records(Stage::operational).size() == 1);
    CHECK(fs::path(cell(t, 0, "path")).parent_path() == root / "Emissions" / "Operational");
    fs::remove_all(root);
}

TEST_CASE("track keeps the measurement when the child fails") {
    const fs::path root = fresh_dir("track_fail");
    const auto r = run({"--region", "CH", "--power", "fixed:50", "--ledger", root.string(), "track", "--stage",
                        "developmental", "--", "sh", "-c", "exit 3"});
    CHECK(r.code == 3);
    LedgerStore store(root);
    const auto recs = store.records(Stage::developmental);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].failed);
    CHECK(run({"--region", "CH", "--power", "fixed:50", "--ledger", root.string(), "track", "--stage", "operational",
               "--", "/nonexistent/program"})
              .code == 127);
    fs::remove_all(root);
}

TEST_CASE("track rejects an unknown stage without writing") {
    const fs::path root = fresh_dir("track_bad");
    const auto r = run({"--region", "CH", "--power", "fixed:50", "--ledger", root.string(), "track", "--stage",
                        "training", "--", "true"});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("training") != std::string::npos);
    CHECK_FALSE(fs::exists(root / "Emissions"));
    CHECK(run({"--power", "fixed:50", "--ledger", root.string(), "track", "--stage", "operational", "--", "true"})
              .code == kExitUsage);
}

TEST_CASE("track routes embodied work and counts inferences") {
    const fs::path root = fresh_dir("track_route");
    const std::vector<std::string> base{"--region", "GB", "--power", "rated:100", "--ledger", root.string(), "track"};
    auto args = base;
    args.insert(args.end(), {"--stage", "embodied", "--label", "make-data", "--", "true"});
    REQUIRE(run(args).code == 0);
    args = base;
    args.insert(args.end(), {"--stage", "inference", "--inferences", "5", "--", "true"});
    REQUIRE(run(args).code == 0);
    LedgerStore store(root);
    const auto emb = store.records(Stage::embodied);
    REQUIRE(emb.size() == 1);
    CHECK(emb[0].label == "make-data");
    CHECK(store.records(Stage::inference).at(0).inference_count == 5);
    fs::remove_all(root);
}

TEST_CASE("score reproduces a published row from fixture files") {
    const auto& fno = fixtures::kBenchmarkRows[10];
    REQUIRE(std::string(fno.method) == "FNO");
    const fs::path root = fixture_ledger(fno, "score_fno");
    const auto t = table_of(run({"--ledger", root.string(), "--format", "csv", "score", "--error", "7.16e-3"}));
    CHECK(std::fabs(num(t, 0, "EcoL2") - 0.581) <= fixtures::kScoreTolerance);
    CHECK(num(t, 0, "C_e") == fno.c_e);
    CHECK(num(t, 0, "C") == doctest::Approx(fno.c_e + fno.c_d + fno.c_o + fno.c_i).epsilon(1e-12));
    CHECK(cell(t, 0, "model") == "ecol2_cli_score_fno");
    LedgerStore store(root);
    const auto stored = store.read_score_inputs();
    REQUIRE(stored.has_value());
    CHECK(stored->errors.relative_l2 == 7.16e-3);
    fs::remove_all(root);
}

TEST_CASE("score from identical fields clamps the error") {
    const auto& row = fixtures::kBenchmarkRows[0];
    const fs::path root = fixture_ledger(row, "score_same");
    write_text(root / "p.csv", "1,2,3\n4,5,6\n");
    write_text(root / "r.csv", "1,2,3\n4,5,6\n");
    const auto t = table_of(run({"--ledger", root.string(), "--format", "csv", "score", "--pred",
                                 (root / "p.csv").string(), "--ref", (root / "r.csv").string()}));
    CHECK(num(t, 0, "R") == 0.0);
    CHECK(cell(t, 0, "flags") == "clamped");
    const double c = row.c_d + row.c_o + row.c_i;
    const double numerator = 1.0 - std::pow(std::numeric_limits<double>::epsilon(), 1.0 / std::log(100.0));
    CHECK(num(t, 0, "EcoL2") == doctest::Approx(numerator / (1 + 100 * c)).epsilon(1e-12));
    CHECK(cell(t, 0, "C_e").empty());
    fs::remove_all(root);
}

TEST_CASE("score validation") {
    const auto& row = fixtures::kBenchmarkRows[0];
    const fs::path root = fixture_ledger(row, "score_bad");
    const auto alpha = run({"--ledger", root.string(), "--alpha", "1", "score", "--error", "0.01"});
    CHECK(alpha.code == kExitUsage);
    CHECK(alpha.err.find("alpha") != std::string::npos);
    const auto missing = run({"--ledger", (root / "absent").string(), "score"});
    CHECK(missing.code == kExitUsage);
    CHECK(missing.err.find("missing inputs") != std::string::npos);
    CHECK(missing.err.find("ledger") != std::string::npos);
    CHECK(missing.err.find("--pred") != std::string::npos);
    CHECK(missing.err.find("--ref") != std::string::npos);
    write_text(root / "z.csv", "0,0\n");
    write_text(root / "p.csv", "1,0\n");
    CHECK(run({"--ledger", root.string(), "score", "--pred", (root / "p.csv").string(), "--ref",
               (root / "z.csv").string()})
              .code == kExitUsage);
    fs::remove_all(root);
}

TEST_CASE("bench output is byte-identical across repeats") {
    for (const char* format : {"csv", "json"}) {
        std::string outputs[2];
        for (int k = 0; k < 2; ++k) {
            const fs::path root = fresh_dir("bench_rep" + std::to_string(k));
            const auto r = run({"--region", "CH", "--power", "fixed:50", "--seed", "7", "--ledger", root.string(),
                                "--format", format, "bench", "advection"});
            REQUIRE_MESSAGE(r.code == 0, r.err);
            outputs[k] = r.out;
            fs::remove_all(root);
        }
        CHECK(outputs[0] == outputs[1]);
    }
}

TEST_CASE("bench stage semantics") {
    const fs::path adv = fresh_dir("bench_adv");
    const auto a = table_of(run({"--region", "CH", "--power", "fixed:50", "--ledger", adv.string(), "--format", "csv",
                                 "bench", "advection"}));
    CHECK(cell(a, 0, "C_e").empty());
    CHECK(num(a, 0, "C_d") > 0.0);
    CHECK_FALSE(fs::exists(adv / "Emissions" / "Embodied"));
    CHECK(run({"--region", "CH", "--power", "fixed:50", "--ledger", adv.string(), "bench", "advection"}).code ==
          kExitUsage);

    const fs::path kdv = fresh_dir("bench_kdv");
    const auto k = table_of(run({"--region", "CH", "--power", "fixed:50", "--ledger", kdv.string(), "--format", "csv",
                                 "bench", "kdv", "--dataset-size", "4"}));
    CHECK(num(k, 0, "C_e") > 0.0);
    CHECK(LedgerStore(kdv).records(Stage::embodied).size() == 1);
    CHECK(cell(k, 0, "model").rfind("kdv/", 0) == 0);
    fs::remove_all(adv);
    fs::remove_all(kdv);
}

TEST_CASE("bench sweeps over alpha and beta") {
    const fs::path root = fresh_dir("bench_ks");
    const auto t = table_of(run({"--region", "CH", "--power", "fixed:50", "--ledger", root.string(), "--format", "csv",
                                 "bench", "ks", "--dataset-size", "4", "--sweep-alpha", "10,100,1000"}));
    REQUIRE(t.rows.size() == 3);
    CHECK(num(t, 0, "alpha") == 10.0);
    CHECK(num(t, 2, "alpha") == 1000.0);
    const double r = num(t, 0, "R");
    CHECK(r > 0.0);
    CHECK(r < 0.1);
    CHECK(num(t, 0, "EcoL2") > num(t, 1, "EcoL2"));
    CHECK(num(t, 1, "EcoL2") > num(t, 2, "EcoL2"));
    fs::remove_all(root);

    const fs::path beta = fresh_dir("bench_beta");
    const auto b = table_of(run({"--region", "CH", "--power", "fixed:50", "--ledger", beta.string(), "--format", "csv",
                                 "bench", "advection", "--sweep-beta", "1,100,10000"}));
    REQUIRE(b.rows.size() == 3);
    CHECK(num(b, 0, "EcoL2") > num(b, 1, "EcoL2"));
    CHECK(num(b, 1, "EcoL2") > num(b, 2, "EcoL2"));
    fs::remove_all(beta);
    CHECK(run({"--region", "CH", "--power", "sample", "--clock", "virtual", "bench", "advection"}).code == kExitUsage);
    CHECK(run({"--region", "CH", "--power", "fixed:50", "bench", "heat"}).code == kExitUsage);
}

TEST_CASE("regions rescale carbon and keep time") {
    const fs::path root = fresh_dir("regions");
    REQUIRE(run({"--region", "CH", "--power", "fixed:50", "--ledger", root.string(), "bench", "advection"}).code == 0);
    const auto t = table_of(
        run({"--ledger", root.string(), "--format", "csv", "regions", "NZ", "ZA", "CH", "AE", "GB", "US"}));
    REQUIRE(t.rows.size() == 6);
    std::map<std::string, std::size_t> at;
    for (std::size_t i = 0; i < t.rows.size(); ++i) at[cell(t, i, "region")] = i;
    const std::vector<std::string> order{"CH", "NZ", "GB", "US", "AE", "ZA"};
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        CHECK(num(t, at[order[i]], "C") < num(t, at[order[i + 1]], "C"));
        CHECK(num(t, at[order[i]], "EcoL2") > num(t, at[order[i + 1]], "EcoL2"));
    }
    CHECK(num(t, at["ZA"], "C") / num(t, at["CH"], "C") == doctest::Approx(707.69 / 34.84).epsilon(1e-12));
    CHECK(num(t, at["ZA"], "C") / num(t, at["CH"], "C") == doctest::Approx(20.31).epsilon(1e-3));
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        CHECK(cell(t, i, "duration_s") == cell(t, 0, "duration_s"));
        CHECK(cell(t, i, "energy_kwh") == cell(t, 0, "energy_kwh"));
    }

    const auto scored = table_of(run({"--ledger", root.string(), "--format", "csv", "report", root.string()}));
    const auto same = table_of(run({"--ledger", root.string(), "--format", "csv", "regions", "ch"}));
    CHECK(num(same, 0, "C") == doctest::Approx(num(scored, 0, "C")).epsilon(1e-14));
    CHECK(num(same, 0, "EcoL2") == doctest::Approx(num(scored, 0, "EcoL2")).epsilon(1e-14));
    CHECK(run({"--ledger", root.string(), "regions", "XX"}).code == kExitUsage);
    fs::remove_all(root);
}

TEST_CASE("report orders published advection rows") {
    std::vector<std::string> roots;
    for (int i = 0; i < 3; ++i) {
        const auto& row = fixtures::kBenchmarkRows[i];
        const fs::path root = fixture_ledger(row, std::string("report_") + row.method);
        REQUIRE(run({"--ledger", root.string(), "score", "--error", csv::format_double(row.r), "--model", row.method})
                    .code == 0);
        roots.push_back(root.string());
    }
    std::vector<std::string> args{"--format", "csv", "report"};
    args.insert(args.end(), roots.begin(), roots.end());
    const auto t = table_of(run(args));
    REQUIRE(t.rows.size() == 3);
    std::map<std::string, double> score;
    for (std::size_t i = 0; i < 3; ++i) score[cell(t, i, "model")] = num(t, i, "EcoL2");
    CHECK(score["PINNs"] > score["SPINN"]);
    CHECK(score["SPINN"] > score["PINNsFormer"]);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::fabs(num(t, i, "EcoL2") - fixtures::kBenchmarkRows[i].score) <= fixtures::kScoreTolerance);
        CHECK(num(t, i, "R") == fixtures::kBenchmarkRows[i].r);
    }

    const auto single = table_of(run({"--format", "csv", "report", roots[0]}));
    CHECK(single.rows.size() == 1);
    const auto json = run({"--format", "json", "report", roots[0]});
    CHECK(json.out.find("\"model\": \"PINNs\"") != std::string::npos);
    const auto table = run({"report", roots[0]});
    CHECK(table.out.find("4.78e-4") != std::string::npos);
    CHECK(run({"report", (fs::temp_directory_path() / "ecol2_cli_none").string()}).code == kExitRuntime);
    for (const auto& r : roots) fs::remove_all(r);
}

TEST_CASE("help and usage errors") {
    CHECK(run({"--help"}).code == kExitOk);
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"--format", "xml", "report", "x"}).code == kExitUsage);
}
