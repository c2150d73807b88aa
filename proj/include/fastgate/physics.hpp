#pragma once

// Physical constants, trap-array configuration, and the dimensionless
// parameters that govern fast gates between neighbouring microtraps.

#include <cmath>
#include <numbers>
#include <string>

#include "fastgate/errors.hpp"

namespace fastgate {

/// CODATA 2018 values, SI units.
struct ConstantsTable {
    static constexpr double elementary_charge = 1.602176634e-19;     // C (exact)
    static constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
    static constexpr double reduced_planck = 1.054571817e-34;        // J s (exact)
    static constexpr double atomic_mass_unit = 1.66053906660e-27;    // kg
    static constexpr double electron_mass = 9.1093837015e-31;        // kg

    /// e^2 / (4 pi eps0), in J m.
    static constexpr double coulomb_constant_e2() {
        return elementary_charge * elementary_charge /
               (4.0 * std::numbers::pi * vacuum_permittivity);
    }
};

struct IonSpecies {
    std::string name;
    double mass = 0.0;  // kg

    /// Singly-charged 40Ca: neutral atomic mass minus one electron.
    static IonSpecies calcium40() {
        return {"40Ca+", 39.962590866 * ConstantsTable::atomic_mass_unit -
                             ConstantsTable::electron_mass};
    }
};

/// Wave number of a single beam with the given vacuum wavelength.
inline double wavenumber_from_wavelength(double wavelength) {
    return 2.0 * std::numbers::pi / wavelength;
}

/// Momentum transferred per counter-propagating pi-pulse pair is 2 hbar k.
inline double counter_propagating_wavenumber(double wavelength) {
    return 2.0 * wavenumber_from_wavelength(wavelength);
}

inline constexpr double default_laser_wavelength = 729e-9;  // m

/// One-dimensional chain of identical microtraps, one ion per trap.
struct TrapArrayConfig {
    int ion_count = 2;
    double spacing = 100e-6;                                  // m
    double trap_frequency = 2.0 * std::numbers::pi * 1e6;     // rad/s
    IonSpecies species = IonSpecies::calcium40();
    double effective_wavenumber = counter_propagating_wavenumber(default_laser_wavelength);  // rad/m

    void validate() const {
        detail::require(ion_count >= 2, "ion_count must be >= 2");
        detail::require(std::isfinite(spacing) && spacing > 0.0, "spacing must be finite and > 0");
        detail::require(std::isfinite(trap_frequency) && trap_frequency > 0.0,
                        "trap_frequency must be finite and > 0");
        detail::require(std::isfinite(species.mass) && species.mass > 0.0,
                        "species mass must be finite and > 0");
        detail::require(std::isfinite(effective_wavenumber) && effective_wavenumber > 0.0,
                        "effective_wavenumber must be finite and > 0");
    }

    double trap_period() const { return 2.0 * std::numbers::pi / trap_frequency; }
};

struct DerivedParams {
    double alpha = 0.0;  // m^3/s^2, Coulomb strength per unit mass
    double xi = 0.0;     // d^3 w^2 / alpha
    double chi = 0.0;    // (w_BR - w) / w for two ions
    double eta = 0.0;    // Lamb-Dicke parameter at the trap frequency
};

/// Coulomb coupling per unit mass, e^2 / (4 pi eps0 M).
inline double coulomb_alpha(double mass) {
    detail::require(std::isfinite(mass) && mass > 0.0, "mass must be finite and > 0");
    return ConstantsTable::coulomb_constant_e2() / mass;
}

/// Relative breathing-mode splitting of two coupled traps, sqrt(1 + 4/xi) - 1.
inline double chi_from_xi(double xi) {
    detail::require(!std::isnan(xi), "xi must not be NaN");
    detail::require(xi > 0.0, "xi must be > 0");
    if (std::isinf(xi)) {
        return 0.0;
    }
    // sqrt(1+u) - 1 = u / (sqrt(1+u) + 1) keeps full precision at small u.
    const double u = 4.0 / xi;
    return u / (std::sqrt(1.0 + u) + 1.0);
}

/// Inverse of chi_from_xi.
inline double xi_from_chi(double chi) {
    detail::require(std::isfinite(chi) && chi > 0.0, "chi must be finite and > 0");
    return 4.0 / (chi * (chi + 2.0));
}

inline double lamb_dicke(double effective_wavenumber, double mass, double angular_frequency) {
    return effective_wavenumber *
           std::sqrt(ConstantsTable::reduced_planck / (2.0 * mass * angular_frequency));
}

inline DerivedParams derive_params(const TrapArrayConfig &config) {
    config.validate();
    DerivedParams p;
    p.alpha = coulomb_alpha(config.species.mass);
    p.xi = config.spacing * config.spacing * config.spacing * config.trap_frequency *
           config.trap_frequency / p.alpha;
    p.chi = chi_from_xi(p.xi);
    p.eta = lamb_dicke(config.effective_wavenumber, config.species.mass, config.trap_frequency);
    return p;
}

/// Trap spacing giving the requested chi at fixed species and trap frequency.
inline double spacing_for_chi(double chi, double mass, double trap_frequency) {
    const double xi = xi_from_chi(chi);
    return std::cbrt(xi * coulomb_alpha(mass) / (trap_frequency * trap_frequency));
}

}  // namespace fastgate
