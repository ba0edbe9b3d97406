#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "evqoe/core/time.hpp"

namespace evqoe::ingest {

/// One charging session as recorded by the operator.
struct SessionRecord {
    std::string session_id;
    std::string outlet_id;
    std::string station_id;
    std::string postal_code;
    Timestamp start_time;
    Timestamp end_time;
    double energy_kwh = 0.0;
    std::optional<double> payment;
    std::string account_id;

    Seconds duration() const { return end_time - start_time; }
    bool operator==(const SessionRecord&) const = default;
};

struct CleaningRules {
    Seconds min_duration = Minutes{3};
    Seconds max_duration = Minutes{120};
    bool require_payment = true;
    bool require_energy = true;
    /// Resumed sessions of one account separated by at most this gap count as one request.
    Seconds merge_gap = Seconds{60};

    /// Throws ArgumentError unless min < max and merge_gap < min.
    void validate() const;
};

enum class RejectReason { TooShort, TooLong, NoPayment, NoEnergy, Malformed, NegativeDuration };

std::string_view to_string(RejectReason r);

struct RejectedRecord {
    SessionRecord record;
    RejectReason reason;
    /// Original text fields; populated for rows that failed to parse.
    std::vector<std::string> raw_fields;
};

enum class ChargerLevel { L2, L3 };

struct Site {
    std::string site_id;
    std::string postal_code;
    std::set<std::string> station_ids;
    int num_chargers = 1;
    /// Per-station level, aligned with the sorted station_ids; informational only.
    std::vector<ChargerLevel> charger_levels;
};

/// Operator ground truth for site sizes: postal_code -> (num_chargers, levels).
struct ManifestEntry {
    int num_chargers = 1;
    std::vector<ChargerLevel> levels;
};
using SiteManifest = std::map<std::string, ManifestEntry>;

struct OccupancyTimeline {
    std::string site_id;
    Timestamp window_start;
    std::vector<int> counts;  // one per minute slot
    int num_chargers = 1;
    /// Slots where overlapping records exceeded num_chargers and were capped.
    std::size_t capped_slots = 0;

    std::size_t size() const noexcept { return counts.size(); }
};

struct ParseResult {
    std::vector<SessionRecord> records;
    std::vector<RejectedRecord> rejected;
};

inline const std::vector<std::string>& session_columns() {
    static const std::vector<std::string> cols{"session_id", "outlet_id",  "station_id",
                                               "postal_code", "start_time", "end_time",
                                               "energy_kwh",  "payment",    "account_id"};
    return cols;
}

/// Reads the session CSV. Rows that do not parse become Malformed rejections;
/// a missing header column throws SchemaError, an unreadable stream IoError.
ParseResult parse_sessions(std::istream& in);
void write_sessions(std::ostream& out, const std::vector<SessionRecord>& records);
void write_rejections(std::ostream& out, const std::vector<RejectedRecord>& rejected);

struct CleanResult {
    std::vector<SessionRecord> valid;
    std::vector<RejectedRecord> rejected;
};

/// Applies the validity rules; each rejection carries the first failing rule in the order
/// NegativeDuration, TooShort, TooLong, NoPayment, NoEnergy.
CleanResult clean_sessions(const std::vector<SessionRecord>& records, const CleaningRules& rules);

/// Coalesces consecutive sessions of one account on one site whose separation is at most
/// rules.merge_gap. Records with an empty account_id are never merged. Output is ordered by
/// (postal_code, start_time, session_id).
std::vector<SessionRecord> merge_resumed_sessions(std::vector<SessionRecord> records,
                                                  const CleaningRules& rules);

struct ClusterResult {
    std::map<std::string, Site> sites;  // keyed by postal code
    std::vector<RejectedRecord> rejected;
};

/// Groups stations into sites by postal code. Charger count is the number of distinct
/// outlets unless the manifest declares it.
ClusterResult cluster_sites(const std::vector<SessionRecord>& records,
                            const SiteManifest* manifest = nullptr);

SiteManifest parse_manifest(std::istream& in);
void write_sites(std::ostream& out, const std::map<std::string, Site>& sites);
/// Reads the sites file written by write_sites back as a manifest.
SiteManifest parse_sites(std::istream& in);

/// Rasterizes sessions into one-minute slots over [window_start, window_end).
/// A slot counts a session when they overlap by any positive amount.
OccupancyTimeline build_occupancy_timeline(const Site& site,
                                           const std::vector<SessionRecord>& sessions,
                                           Timestamp window_start, Timestamp window_end);

}  // namespace evqoe::ingest
