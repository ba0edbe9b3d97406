#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "evqoe/core/time.hpp"
#include "evqoe/features.hpp"
#include "evqoe/ingest.hpp"

namespace evqoe::synth {

struct SiteConfig {
    std::string site_id;
    std::string postal_code;
    int num_chargers = 2;
    double base_rate = 20.0;  ///< arrivals per day
    std::array<double, 7> weekday_profile{1, 1, 1, 1, 1, 1, 1};  ///< Monday first
    double annual_amplitude = 0.3;
    double growth_per_year = 0.1;
    int shape_k = 2;
    double service_rate = 0.05;  ///< per minute
    double power_kw = 7.2;
};

struct GapConfig {
    Date start;
    Date end;  ///< inclusive
    double suppression = 0.6;
};

struct RegistryGrowth {
    double initial_evs = 1000.0;
    double evs_per_month = 50.0;
    double initial_evcs = 20.0;
    double evcs_per_month = 1.0;
};

struct SynthConfig {
    std::vector<SiteConfig> sites;
    Date start;
    Date end;  ///< inclusive
    std::optional<GapConfig> gap;
    RegistryGrowth registry_growth;
    std::uint64_t seed = 1;
    double tariff_per_kwh = 0.25;
    int accounts_per_site = 500;
    double max_delay_hours = 6.0;

    /// Throws ArgumentError on invalid values; weekday profiles must have a positive sum and
    /// are rescaled to sum to 7 by normalized().
    void validate() const;
    SynthConfig normalized() const;
};

/// Multi-site configuration used by `synth` when no config file overrides it.
SynthConfig reference_config();

/// Expected arrivals on `date` for `site`, including the gap suppression.
double expected_rate(const SiteConfig& site, const SynthConfig& config, Date date);

struct SiteTruth {
    std::string site_id;
    std::vector<double> expected_daily;    ///< lambda(d), one per day from config.start
    std::vector<double> unsuppressed_daily;
    int shape_k = 0;
    double service_rate = 0.0;
    std::size_t arrivals = 0;
    std::size_t dropped = 0;
};

struct GroundTruth {
    Date start;
    Date end;
    std::uint64_t seed = 0;
    std::vector<SiteTruth> sites;
    features::Registry registry;
};

struct SynthOutput {
    std::vector<ingest::SessionRecord> sessions;  ///< sorted by (postal_code, start_time, session_id)
    GroundTruth truth;
};

/// Poisson arrivals per day, Erlang durations clamped to [3, 120] min, first-free outlet
/// assignment with queued arrivals dropped after max_delay_hours.
SynthOutput generate_sessions(const SynthConfig& config);

/// Poisson daily arrival counts for one site (the demand before outlet capacity), using the
/// same per-site stream derivation as generate_sessions.
std::vector<double> daily_counts(const SynthConfig& config, std::size_t site_index);

/// Monthly step series of EV and charger counts per site region and for the province (sum of
/// regions), month m after the start month holding initial + m * per_month.
features::Registry registry_series(const SynthConfig& config);

/// `postal_code,num_chargers,levels` for every configured site.
void write_manifest(std::ostream& out, const SynthConfig& config);
void write_ground_truth(std::ostream& out, const GroundTruth& truth);

}  // namespace evqoe::synth
