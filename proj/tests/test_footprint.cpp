#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support.hpp"
#include "wattprint/error.hpp"
#include "wattprint/footprint.hpp"

using namespace wattprint;
using testsupport::rel_err;
using testsupport::TempDir;

namespace {

CarbonIntensityTable sample_table(const TempDir& tmp) {
    CarbonIntensityTable table;
    table.load_csv(tmp.file("ci.csv",
                            "region_code,intensity_g_per_kwh,year,source\n"
                            "FR,64,2023,daily average 2023-03-05\n"
                            "SE-N,16,2023,daily average 2023-03-05\n"
                            "ZA,684,2023,daily average 2023-03-05\n"
                            "US-SC,432,2023,daily average 2023-03-05\n"));
    return table;
}

} // namespace

TEST_CASE("pue application") {
    const auto [ga, ga_pue] = apply_pue(3.590, Strategy::GA);
    CHECK(ga_pue == 1.67);
    CHECK(ga == doctest::Approx(5.9953).epsilon(1e-9));
    CHECK(rel_err(ga, 5.990) < 0.002);

    const auto [e2, e2_pue] = apply_pue(123.0, Strategy::E2);
    CHECK(e2 == 123.0);
    CHECK(e2_pue == 1.0);

    const auto [ct, ct_pue] = apply_pue(100.0, Strategy::CT);
    CHECK(ct == doctest::Approx(155.0).epsilon(1e-12));
    CHECK(ct_pue == 1.55);

    CHECK(apply_pue(50.0, Strategy::EIT).second == 1.58);
    CHECK(apply_pue(50.0, Strategy::CC).second == 1.0);

    SUBCASE("override wins") {
        CHECK(apply_pue(100.0, Strategy::GA, 1.2).first ==
              doctest::Approx(120.0));
    }
    SUBCASE("override below one is rejected") {
        try {
            apply_pue(100.0, Strategy::GA, 0.5);
            FAIL("expected invalid-argument error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::invalid_argument);
        }
    }
    SUBCASE("pue never decreases energy") {
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> energy(0.0, 1e4);
        for (int i = 0; i < 100; ++i) {
            const double e = energy(rng);
            for (Strategy s : kAllStrategies)
                CHECK(apply_pue(e, s).first >= e);
        }
    }
}

TEST_CASE("carbon intensity lookup") {
    TempDir tmp;
    const auto table = sample_table(tmp);

    const auto fr = lookup_carbon_intensity(table, "FR", Strategy::GA);
    CHECK(fr.intensity_g_per_kwh == 64.0);
    CHECK(fr.provenance == Provenance::catalog);

    CHECK(lookup_carbon_intensity(table, "XX", Strategy::EIT)
              .intensity_g_per_kwh == 301.0);
    CHECK(lookup_carbon_intensity(table, "XX", Strategy::GA)
              .intensity_g_per_kwh == 475.0);
    CHECK(lookup_carbon_intensity(table, "XX", Strategy::E2)
              .intensity_g_per_kwh == 436.5);
    CHECK(lookup_carbon_intensity(table, "XX", Strategy::CMLTR)
              .intensity_g_per_kwh == 447.0);
    CHECK(lookup_carbon_intensity(table, "", Strategy::CT)
              .provenance == Provenance::strategy_default);

    try {
        lookup_carbon_intensity(table, "XX", Strategy::MLCO2);
        FAIL("expected intensity-required error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::intensity_required);
    }
}

TEST_CASE("emissions arithmetic") {
    CHECK(emissions_g(1000.0, 64.0) == doctest::Approx(64.0).epsilon(1e-12));
    CHECK(emissions_g(0.0, 475.0) == 0.0);

    CHECK(energy_from_emissions_kwh(0.563, 447.0) ==
          doctest::Approx(1.259e-3).epsilon(1e-3));
    CHECK(energy_from_emissions_kwh(0.0, 100.0) == 0.0);
    try {
        energy_from_emissions_kwh(1.0, 0.0);
        FAIL("expected division error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::division);
    }

    SUBCASE("roundtrip identity") {
        std::mt19937 rng(9);
        std::uniform_real_distribution<double> energy(0.0, 1e5);
        std::uniform_real_distribution<double> intensity(1.0, 900.0);
        for (int i = 0; i < 1000; ++i) {
            const double e_wh = energy(rng);
            const double ci = intensity(rng);
            const double back =
                energy_from_emissions_kwh(emissions_g(e_wh, ci), ci) * 1000.0;
            CHECK(rel_err(back, e_wh) <= 1e-12);
        }
    }
}

TEST_CASE("transfer and storage footprints") {
    CHECK(transfer_footprint_kwh(6.0) == doctest::Approx(0.138).epsilon(1e-12));
    CHECK(transfer_footprint_kwh(0.0) == 0.0);

    const auto st = storage_footprint(1.0, 1.0);
    CHECK(st.carbon_kg == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(st.energy_kwh == doctest::Approx(53.248).epsilon(1e-12));
    CHECK(storage_footprint(0.0, 5.0).carbon_kg == 0.0);
}

TEST_CASE("run scaling") {
    TempDir tmp;
    const auto table = sample_table(tmp);
    EnergyBreakdown b;
    b.strategy = Strategy::GA;
    b.total_wh = 1000.0;
    auto report = make_emission_report(b, table, "FR");
    CHECK(report.emissions_gco2eq ==
          doctest::Approx(1000.0 * 1.67 / 1000.0 * 64.0));

    SUBCASE("factor one is the identity") {
        const auto same = scale_runs(report, 1.0);
        CHECK(same.emissions_gco2eq == report.emissions_gco2eq);
        CHECK(same.energy_with_pue_wh == report.energy_with_pue_wh);
    }
    SUBCASE("factor three triples both") {
        auto flat = report;
        flat.emissions_gco2eq = 64.0;
        const auto tripled = scale_runs(flat, 3.0);
        CHECK(tripled.emissions_gco2eq == doctest::Approx(192.0));
        CHECK(tripled.scaling_factor == 3.0);
    }
    SUBCASE("factor below one is rejected") {
        try {
            scale_runs(report, 0.5);
            FAIL("expected invalid-factor error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::invalid_argument);
        }
    }
}

TEST_CASE("every report constant carries provenance") {
    TempDir tmp;
    const auto table = sample_table(tmp);
    const auto catalog = testsupport::sample_catalog(tmp);
    const auto spec = testsupport::big_node();
    const auto b = estimate_green_algorithms(catalog, spec, 3600.0, {});
    const auto report = make_emission_report(b, table, "FR");

    bool has_pue = false, has_ci = false, has_cpu_tdp = false;
    for (const auto& c : report.constants_used) {
        if (c.name == "pue") has_pue = true;
        if (c.name == "carbon_intensity_g_per_kwh") has_ci = true;
        if (c.name == "cpu_tdp_w") {
            has_cpu_tdp = true;
            CHECK(c.provenance == Provenance::catalog);
        }
    }
    CHECK(has_pue);
    CHECK(has_ci);
    CHECK(has_cpu_tdp);
}

TEST_CASE("emission ranking follows intensity ranking") {
    TempDir tmp;
    const auto table = sample_table(tmp);
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> energy(1.0, 1e4);
    for (int i = 0; i < 50; ++i) {
        const double e = energy(rng);
        const double fr = emissions_g(e, 64.0);
        const double se = emissions_g(e, 16.0);
        const double za = emissions_g(e, 684.0);
        CHECK(se < fr);
        CHECK(fr < za);
    }
}

TEST_CASE("intensity providers") {
    TempDir tmp;

    SUBCASE("static table ignores the date") {
        StaticTableProvider provider(sample_table(tmp));
        const auto a = provider.get("FR", "2023-03-05");
        const auto b = provider.get("FR", "2024-12-31");
        CHECK(a.intensity_g_per_kwh == b.intensity_g_per_kwh);
        CHECK_THROWS_AS((void)provider.get("XX", "2023-03-05"), Error);
    }
    SUBCASE("fixture provider keys on region and date") {
        const std::string path =
            tmp.file("fixture.csv", "region_code,date,intensity_g_per_kwh\n"
                                    "FR,2023-03-05,64\n"
                                    "FR,2023-03-29,137\n");
        FixtureFileProvider provider(path);
        CHECK(provider.get("FR", "2023-03-29").intensity_g_per_kwh == 137.0);
        CHECK(provider.get("FR", "2023-03-05").intensity_g_per_kwh == 64.0);
        try {
            (void)provider.get("FR", "2023-04-01");
            FAIL("expected not-found error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::not_found);
        }
    }
}

TEST_CASE("user intensity override bypasses the table") {
    TempDir tmp;
    const auto table = sample_table(tmp);
    EnergyBreakdown b;
    b.strategy = Strategy::MLCO2;
    b.total_wh = 1000.0;
    const auto report = make_emission_report(b, table, "", {}, 250.0);
    CHECK(report.carbon_intensity.provenance == Provenance::user);
    CHECK(report.emissions_gco2eq == doctest::Approx(250.0));
}
