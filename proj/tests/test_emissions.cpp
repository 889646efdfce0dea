#include <doctest.h>

#include "ecol2/emissions.hpp"
#include "ecol2/errors.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

using namespace ecol2;
namespace fs = std::filesystem;

namespace {

bool close_rel(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::fabs(b); }

EmissionRecord fixed_run(double watts, double seconds, const std::string& region,
                         const RegionRegistry& reg = RegionRegistry::builtin()) {
    VirtualClock clock;
    EmissionSession s(Stage::operational, "run", PowerModel::fixed(watts), region, reg, clock);
    clock.charge(seconds);
    return s.stop();
}

}  // namespace

TEST_CASE("built-in intensities are exact") {
    const auto reg = RegionRegistry::builtin();
    CHECK(reg.lookup("NZ") == 112.76);
    CHECK(reg.lookup("ZA") == 707.69);
    CHECK(reg.lookup("CH") == 34.84);
    CHECK(reg.lookup("AE") == 561.14);
    CHECK(reg.lookup("GB") == 237.59);
    CHECK(reg.lookup("US") == 369.47);
    CHECK(reg.codes().size() == 6);
}

TEST_CASE("unknown region lists the available codes") {
    const auto reg = RegionRegistry::builtin();
    try {
        (void)reg.lookup("XX");
        FAIL("expected ParameterError");
    } catch (const ParameterError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("XX") != std::string::npos);
        CHECK(msg.find("CH") != std::string::npos);
        CHECK(msg.find("ZA") != std::string::npos);
    }
    VirtualClock clock;
    CHECK_THROWS_AS(EmissionSession(Stage::operational, "x", PowerModel::fixed(1), "XX", reg, clock),
                    ParameterError);
}

TEST_CASE("registry loads and extends from CSV") {
    const fs::path p = fs::temp_directory_path() / "ecol2_regions_test.csv";
    {
        std::ofstream out(p);
        out << "iso_code,intensity_g_per_kwh\nfr,56.0\nCH,40\n";
    }
    auto reg = RegionRegistry::builtin();
    reg.load_csv(p);
    CHECK(reg.lookup("FR") == 56.0);
    CHECK(reg.lookup("CH") == 40.0);
    {
        std::ofstream out(p);
        out << "code,value\nFR,1\n";
    }
    CHECK_THROWS_AS(reg.load_csv(p), IoError);
    {
        std::ofstream out(p);
        out << "iso_code,intensity_g_per_kwh\nFR,-1\n";
    }
    CHECK_THROWS_AS(reg.load_csv(p), ParameterError);
    fs::remove(p);
}

TEST_CASE("fixed 50 W for two hours in CH") {
    const auto rec = fixed_run(50.0, 7200.0, "CH");
    CHECK(close_rel(rec.energy_kwh, 0.1, 1e-12));
    CHECK(close_rel(rec.emissions_kg, 3.484e-3, 1e-12));
    CHECK(rec.duration_s == 7200.0);
    CHECK(rec.region == "CH");
    CHECK(rec.started_unix_ms == 0);
    CHECK_FALSE(rec.power_trace.has_value());
}

TEST_CASE("zero power gives a degenerate record") {
    const auto rec = fixed_run(0.0, 1234.0, "ZA");
    CHECK(rec.emissions_kg == 0.0);
    CHECK(rec.degenerate());
    CHECK_THROWS_AS(PowerModel::rated(0.0).validate(), ParameterError);
}

TEST_CASE("emissions are linear in power, time and intensity") {
    const auto base = fixed_run(37.0, 911.0, "GB");
    CHECK(close_rel(fixed_run(74.0, 911.0, "GB").emissions_kg, 2 * base.emissions_kg, 1e-12));
    CHECK(close_rel(fixed_run(37.0, 1822.0, "GB").emissions_kg, 2 * base.emissions_kg, 1e-12));
    RegionRegistry reg = RegionRegistry::builtin();
    reg.set("G2", 2 * 237.59);
    CHECK(close_rel(fixed_run(37.0, 911.0, "G2", reg).emissions_kg, 2 * base.emissions_kg, 1e-12));
}

TEST_CASE("region what-if rescaling") {
    const auto reg = RegionRegistry::builtin();
    const auto ch = fixed_run(50.0, 7200.0, "CH");
    const auto za = what_if_region(ch, "ZA", reg);
    CHECK(close_rel(za.emissions_kg, 7.0769e-2, 1e-12));
    CHECK(za.energy_kwh == ch.energy_kwh);
    CHECK(za.duration_s == ch.duration_s);
    CHECK(za.region == "ZA");
    CHECK(za.emissions_kg / ch.emissions_kg == doctest::Approx(707.69 / 34.84).epsilon(1e-14));

    CHECK(what_if_region(ch, "CH", reg) == ch);

    const auto nz = fixed_run(20.0, 300.0, "NZ");
    CHECK(close_rel(what_if_region(nz, "CH", reg).emissions_kg, nz.emissions_kg * 34.84 / 112.76, 1e-12));
    CHECK_THROWS_AS((void)what_if_region(nz, "XX", reg), ParameterError);
}

TEST_CASE("what-if is a group action") {
    const auto reg = RegionRegistry::builtin();
    const auto codes = reg.codes();
    const auto rec = fixed_run(65.0, 4321.0, "US");
    for (const auto& a : codes) {
        for (const auto& b : codes) {
            const auto there = what_if_region(what_if_region(rec, a, reg), b, reg);
            const auto back = what_if_region(there, "US", reg);
            CHECK(close_rel(back.emissions_kg, rec.emissions_kg, 1e-12));
        }
    }
}

TEST_CASE("records of unknown origin are rescaled from energy") {
    EmissionRecord rec;
    rec.region = std::string(kUnknownRegion);
    rec.energy_kwh = 0.1;
    rec.emissions_kg = 123.0;
    CHECK(close_rel(what_if_region(rec, "CH", RegionRegistry::builtin()).emissions_kg, 3.484e-3, 1e-12));
}

TEST_CASE("session lifecycle") {
    VirtualClock clock;
    EmissionSession s(Stage::developmental, "lc", PowerModel::fixed(50), "CH", RegionRegistry::builtin(), clock);
    CHECK(s.active());
    CHECK(s.accumulated_energy_j() == 0.0);
    clock.charge(2.0);
    CHECK(s.accumulated_energy_j() == 100.0);
    s.mark_failed();
    const auto rec = s.stop();
    CHECK(rec.failed);
    CHECK(rec.stage == Stage::developmental);
    CHECK_FALSE(s.active());
    CHECK_THROWS_AS((void)s.stop(), Error);
}

TEST_CASE("inference count is kept only for inference records") {
    VirtualClock clock;
    const auto reg = RegionRegistry::builtin();
    EmissionSession inf(Stage::inference, "i", PowerModel::fixed(10), "CH", reg, clock);
    inf.set_inference_count(25);
    CHECK(inf.stop().inference_count == 25);
    EmissionSession op(Stage::operational, "o", PowerModel::fixed(10), "CH", reg, clock);
    op.set_inference_count(25);
    CHECK(op.stop().inference_count == 1);
    EmissionSession bad(Stage::inference, "b", PowerModel::fixed(10), "CH", reg, clock);
    CHECK_THROWS_AS(bad.set_inference_count(0), ParameterError);
}

TEST_CASE("explicit intensity override") {
    VirtualClock clock;
    EmissionSession s(Stage::operational, "o", PowerModel::fixed(50), "XX", 100.0, clock);
    clock.charge(7200);
    CHECK(close_rel(s.stop().emissions_kg, 0.01, 1e-12));
}

TEST_CASE("power model parsing and validation") {
    CHECK(parse_power_model("sample").kind == PowerModel::Kind::sampled_hardware);
    const auto r = parse_power_model("rated:65");
    CHECK(r.kind == PowerModel::Kind::constant_rated);
    CHECK(r.watts == 65.0);
    CHECK(parse_power_model("fixed:0").watts == 0.0);
    CHECK(parse_power_model("fixed:50").describe() == "fixed:50");
    CHECK_THROWS_AS((void)parse_power_model("rated:0"), ParameterError);
    CHECK_THROWS_AS((void)parse_power_model("fixed:-1"), ParameterError);
    CHECK_THROWS_AS((void)parse_power_model("turbo:5"), ParameterError);
    CHECK_THROWS_AS((void)parse_power_model("rated:abc"), ParameterError);
    CHECK_THROWS_AS(PowerModel::sampled(0.05).validate(), ParameterError);
    CHECK_THROWS_AS(PowerModel::sampled(61).validate(), ParameterError);
    CHECK_NOTHROW(PowerModel::sampled(0.1).validate());
}

TEST_CASE("trapezoid energy") {
    std::vector<PowerSample> constant;
    for (int n : {2, 3, 10, 1000}) {
        constant.clear();
        for (int i = 0; i < n; ++i) constant.push_back({10.0 * i / (n - 1), 42.0});
        CHECK(close_rel(trapezoid_energy_j(constant), 420.0, 1e-9));
    }
    // A linear ramp is integrated exactly.
    const std::vector<PowerSample> ramp{{0, 0}, {1, 10}, {3, 30}};
    CHECK(trapezoid_energy_j(ramp) == doctest::Approx(45.0).epsilon(1e-15));
    CHECK(trapezoid_energy_j(std::vector<PowerSample>{{0, 5}}) == 0.0);
}

TEST_CASE("accumulator supports concurrent append and snapshot") {
    PowerAccumulator acc;
    std::atomic<bool> done{false};
    std::thread writer([&] {
        for (int i = 0; i < 20000; ++i) acc.append({static_cast<double>(i), 1.0});
        done = true;
    });
    std::size_t last = 0;
    while (!done) {
        const auto snap = acc.snapshot();
        CHECK(snap.size() >= last);
        last = snap.size();
    }
    writer.join();
    CHECK(acc.size() == 20000);
}

TEST_CASE("sampled session integrates an injected probe") {
    MonotonicClock clock;
    std::atomic<int> calls{0};
    PowerProbe probe = [&] {
        ++calls;
        return 80.0;
    };
    EmissionSession s(Stage::operational, "sampled", PowerModel::sampled(0.1, probe), "CH",
                      RegionRegistry::builtin(), clock);
    CHECK(sampled_session_active());
    CHECK_THROWS_AS(EmissionSession(Stage::operational, "nested", PowerModel::sampled(0.1, probe), "CH",
                                    RegionRegistry::builtin(), clock),
                    Error);
    std::this_thread::sleep_for(std::chrono::milliseconds(450));
    const auto rec = s.stop();
    CHECK_FALSE(sampled_session_active());
    REQUIRE(rec.power_trace.has_value());
    CHECK(rec.power_trace->size() >= 3);
    CHECK(rec.power_trace->front().t == 0.0);
    const double integral = trapezoid_energy_j(*rec.power_trace);
    CHECK(std::fabs(rec.energy_kwh * kJoulesPerKwh - integral) <= 0.01 * integral);
    CHECK(close_rel(integral, 80.0 * rec.duration_s, 0.05));
    CHECK(calls.load() >= 3);
}

TEST_CASE("RAPL probe reads a fake powercap tree") {
    const fs::path root = fs::temp_directory_path() / "ecol2_fake_powercap";
    fs::remove_all(root);
    fs::create_directories(root / "intel-rapl:0");
    fs::create_directories(root / "intel-rapl:0:0");
    auto write = [](const fs::path& p, const std::string& v) { std::ofstream(p) << v; };
    write(root / "intel-rapl:0" / "energy_uj", "1000000");
    write(root / "intel-rapl:0" / "max_energy_range_uj", "262143328850");
    write(root / "intel-rapl:0:0" / "energy_uj", "999");
    auto probe = rapl_probe(root);
    (void)probe();
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    write(root / "intel-rapl:0" / "energy_uj", "6000000");
    const double watts = probe();
    CHECK(watts > 0.0);
    CHECK(watts < 5.0 / 0.1 + 1e-9);
    fs::remove_all(root);
    CHECK_THROWS_AS((void)rapl_probe(root), IoError);
}

TEST_CASE("stage names") {
    CHECK(parse_stage("Embodied") == Stage::embodied);
    CHECK(parse_stage("INFERENCE") == Stage::inference);
    CHECK(stage_dir(Stage::developmental) == "Developmental");
    CHECK_THROWS_AS((void)parse_stage("training"), ParameterError);
}
