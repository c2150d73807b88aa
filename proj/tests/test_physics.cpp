#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "fastgate/errors.hpp"
#include "fastgate/physics.hpp"

using namespace fastgate;

namespace {

TrapArrayConfig reference_config() { return TrapArrayConfig{}; }

}  // namespace

TEST(DeriveParams, ReferencePointMatchesOperatingChi) {
    const auto p = derive_params(reference_config());
    EXPECT_NEAR(p.xi, 1.137e4, 0.005e4);
    EXPECT_NEAR(p.chi, 1.76e-4, 0.005e-4);
    EXPECT_LT(std::abs(p.chi - 1.8e-4) / 1.8e-4, 0.03);
}

TEST(DeriveParams, LambDickeForCalciumAt729nm) {
    const auto p = derive_params(reference_config());
    EXPECT_LT(std::abs(p.eta - 0.194) / 0.194, 0.01);
}

TEST(DeriveParams, ScaleConsistency) {
    auto cfg = reference_config();
    const auto base = derive_params(cfg);
    for (double s : {0.3, 2.0, 7.5}) {
        cfg.spacing = reference_config().spacing * s;
        cfg.trap_frequency = reference_config().trap_frequency * std::pow(s, -1.5);
        const auto p = derive_params(cfg);
        EXPECT_NEAR(p.xi / base.xi, 1.0, 1e-12);
        EXPECT_NEAR(p.chi / base.chi, 1.0, 1e-12);
    }
}

TEST(DeriveParams, RejectsInvalidInputs) {
    auto cfg = reference_config();
    cfg.spacing = 0.0;
    EXPECT_THROW(derive_params(cfg), InvalidArgument);
    cfg = reference_config();
    cfg.trap_frequency = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(derive_params(cfg), InvalidArgument);
    cfg = reference_config();
    cfg.ion_count = 1;
    EXPECT_THROW(derive_params(cfg), InvalidArgument);
    cfg = reference_config();
    cfg.species.mass = -1.0;
    EXPECT_THROW(derive_params(cfg), InvalidArgument);
    cfg = reference_config();
    cfg.effective_wavenumber = std::numeric_limits<double>::infinity();
    EXPECT_THROW(derive_params(cfg), InvalidArgument);
}

TEST(ChiFromXi, KnownValues) {
    EXPECT_NEAR(chi_from_xi(1.137e4) / 1.7596e-4, 1.0, 5e-4);
    EXPECT_NEAR(chi_from_xi(12.0), std::sqrt(4.0 / 3.0) - 1.0, 1e-15);
    EXPECT_NEAR(chi_from_xi(12.0), 0.1547, 1e-4);
    EXPECT_DOUBLE_EQ(chi_from_xi(4.0 / 3.0), 1.0);
    EXPECT_EQ(chi_from_xi(std::numeric_limits<double>::infinity()), 0.0);
    EXPECT_LT(chi_from_xi(1e300), 1e-299);
}

TEST(ChiFromXi, SmallCouplingAsymptote) {
    for (double xi = 101.0; xi < 1e9; xi *= 3.7) {
        EXPECT_LT(std::abs(chi_from_xi(xi) - 2.0 / xi), 8.0 / (xi * xi)) << xi;
    }
}

TEST(ChiFromXi, RejectsNonPositive) {
    EXPECT_THROW(chi_from_xi(0.0), InvalidArgument);
    EXPECT_THROW(chi_from_xi(-3.0), InvalidArgument);
    EXPECT_THROW(chi_from_xi(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
}

TEST(ChiFromXi, InverseRoundTrip) {
    for (double chi : {1e-6, 1.8e-4, 0.01, 0.5, 3.0}) {
        EXPECT_NEAR(chi_from_xi(xi_from_chi(chi)) / chi, 1.0, 1e-12);
    }
}

TEST(DeriveParams, SpacingForChiInverts) {
    const auto ca = IonSpecies::calcium40();
    const double w = 2.0 * std::numbers::pi * 1e6;
    TrapArrayConfig cfg;
    cfg.spacing = spacing_for_chi(1.8e-4, ca.mass, w);
    EXPECT_NEAR(derive_params(cfg).chi / 1.8e-4, 1.0, 1e-10);
}
