#include "evqoe/ingest.hpp"

#include <algorithm>
#include <tuple>

#include <fmt/format.h>

#include "evqoe/core/csv.hpp"
#include "evqoe/core/errors.hpp"

namespace evqoe::ingest {

void CleaningRules::validate() const {
    if (!(min_duration < max_duration)) {
        throw ArgumentError("cleaning rules: min_duration must be below max_duration");
    }
    if (!(merge_gap < min_duration)) {
        throw ArgumentError("cleaning rules: merge_gap must be below min_duration");
    }
    if (merge_gap < Seconds{0}) throw ArgumentError("cleaning rules: negative merge_gap");
}

std::string_view to_string(RejectReason r) {
    switch (r) {
        case RejectReason::TooShort: return "TooShort";
        case RejectReason::TooLong: return "TooLong";
        case RejectReason::NoPayment: return "NoPayment";
        case RejectReason::NoEnergy: return "NoEnergy";
        case RejectReason::Malformed: return "Malformed";
        case RejectReason::NegativeDuration: return "NegativeDuration";
    }
    return "Unknown";
}

namespace {

csv::Row to_row(const SessionRecord& r) {
    return {r.session_id,
            r.outlet_id,
            r.station_id,
            r.postal_code,
            format_timestamp(r.start_time),
            format_timestamp(r.end_time),
            csv::format_double(r.energy_kwh),
            r.payment ? csv::format_double(*r.payment) : std::string{},
            r.account_id};
}

std::optional<ChargerLevel> parse_level(std::string_view s) {
    if (s == "L2") return ChargerLevel::L2;
    if (s == "L3") return ChargerLevel::L3;
    return std::nullopt;
}

std::string_view level_name(ChargerLevel l) { return l == ChargerLevel::L3 ? "L3" : "L2"; }

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::size_t pos = 0;
    for (;;) {
        const auto next = s.find(sep, pos);
        out.emplace_back(s.substr(pos, next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

void strip_bom(csv::Row& header) {
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
}

SiteManifest read_manifest_rows(std::istream& in, std::string_view what) {
    if (!in) throw IoError(fmt::format("{}: stream not readable", what));
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw SchemaError(fmt::format("{}: empty file", what));
    strip_bom(*header);
    const auto idx = csv::require_columns(*header, {"postal_code", "num_chargers", "levels"}, what);
    SiteManifest manifest;
    while (auto row = reader.next()) {
        if (row->size() != header->size()) {
            throw SchemaError(fmt::format("{}: line {} has {} fields, expected {}", what,
                                          reader.line(), row->size(), header->size()));
        }
        const auto n = csv::parse_int((*row)[idx[1]]);
        if (!n || *n < 1) {
            throw SchemaError(fmt::format("{}: line {}: num_chargers must be a positive integer",
                                          what, reader.line()));
        }
        ManifestEntry entry;
        entry.num_chargers = static_cast<int>(*n);
        for (const auto& tok : split((*row)[idx[2]], ';')) {
            auto lvl = parse_level(tok);
            if (!lvl) {
                throw SchemaError(
                    fmt::format("{}: line {}: unknown charger level '{}'", what, reader.line(), tok));
            }
            entry.levels.push_back(*lvl);
        }
        manifest[(*row)[idx[0]]] = std::move(entry);
    }
    return manifest;
}

}  // namespace

ParseResult parse_sessions(std::istream& in) {
    if (!in) throw IoError("session stream not readable");
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw SchemaError("sessions: empty input, header required");
    strip_bom(*header);
    const auto& cols = session_columns();
    const auto idx = csv::require_columns(*header, cols, "sessions");

    ParseResult result;
    while (auto row = reader.next()) {
        if (in.bad()) throw IoError("session stream read failure");
        std::vector<std::string> fields(cols.size());
        const bool width_ok = row->size() == header->size();
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (idx[c] < row->size()) fields[c] = (*row)[idx[c]];
        }

        SessionRecord rec;
        rec.session_id = fields[0];
        rec.outlet_id = fields[1];
        rec.station_id = fields[2];
        rec.postal_code = fields[3];
        rec.account_id = fields[8];
        const auto start = parse_timestamp(fields[4]);
        const auto end = parse_timestamp(fields[5]);
        const auto energy = csv::parse_double(fields[6]);
        std::optional<double> payment;
        bool payment_ok = true;
        if (!fields[7].empty()) {
            payment = csv::parse_double(fields[7]);
            payment_ok = payment.has_value() && *payment >= 0.0;
        }
        if (start) rec.start_time = *start;
        if (end) rec.end_time = *end;
        if (energy) rec.energy_kwh = *energy;
        rec.payment = payment;

        const bool ok = width_ok && start && end && energy && *energy >= 0.0 && payment_ok;
        if (ok) {
            result.records.push_back(std::move(rec));
        } else {
            result.rejected.push_back({std::move(rec), RejectReason::Malformed, std::move(fields)});
        }
    }
    return result;
}

void write_sessions(std::ostream& out, const std::vector<SessionRecord>& records) {
    csv::write_row(out, session_columns());
    for (const auto& r : records) csv::write_row(out, to_row(r));
}

void write_rejections(std::ostream& out, const std::vector<RejectedRecord>& rejected) {
    auto header = session_columns();
    header.emplace_back("reason");
    csv::write_row(out, header);
    for (const auto& r : rejected) {
        csv::Row row = r.raw_fields.empty() ? to_row(r.record) : r.raw_fields;
        row.emplace_back(to_string(r.reason));
        csv::write_row(out, row);
    }
}

CleanResult clean_sessions(const std::vector<SessionRecord>& records, const CleaningRules& rules) {
    rules.validate();
    CleanResult result;
    for (const auto& r : records) {
        const Seconds dur = r.duration();
        std::optional<RejectReason> reason;
        if (dur < Seconds{0}) {
            reason = RejectReason::NegativeDuration;
        } else if (dur < rules.min_duration) {
            reason = RejectReason::TooShort;
        } else if (dur > rules.max_duration) {
            reason = RejectReason::TooLong;
        } else if (rules.require_payment && !(r.payment && *r.payment > 0.0)) {
            reason = RejectReason::NoPayment;
        } else if (rules.require_energy && !(r.energy_kwh > 0.0)) {
            reason = RejectReason::NoEnergy;
        }
        if (reason) {
            result.rejected.push_back({r, *reason, {}});
        } else {
            result.valid.push_back(r);
        }
    }
    return result;
}

std::vector<SessionRecord> merge_resumed_sessions(std::vector<SessionRecord> records,
                                                  const CleaningRules& rules) {
    std::sort(records.begin(), records.end(), [](const SessionRecord& a, const SessionRecord& b) {
        return std::tie(a.postal_code, a.account_id, a.start_time, a.session_id) <
               std::tie(b.postal_code, b.account_id, b.start_time, b.session_id);
    });

    std::vector<SessionRecord> merged;
    merged.reserve(records.size());
    for (auto& r : records) {
        if (!merged.empty()) {
            SessionRecord& prev = merged.back();
            const bool same_visit = !r.account_id.empty() && prev.account_id == r.account_id &&
                                    prev.postal_code == r.postal_code &&
                                    r.start_time - prev.end_time <= rules.merge_gap;
            if (same_visit) {
                prev.end_time = std::max(prev.end_time, r.end_time);
                prev.energy_kwh += r.energy_kwh;
                if (r.payment) prev.payment = prev.payment.value_or(0.0) + *r.payment;
                continue;
            }
        }
        merged.push_back(std::move(r));
    }

    std::sort(merged.begin(), merged.end(), [](const SessionRecord& a, const SessionRecord& b) {
        return std::tie(a.postal_code, a.start_time, a.session_id) <
               std::tie(b.postal_code, b.start_time, b.session_id);
    });
    return merged;
}

ClusterResult cluster_sites(const std::vector<SessionRecord>& records,
                            const SiteManifest* manifest) {
    ClusterResult result;
    std::map<std::string, std::set<std::string>> outlets;
    for (const auto& r : records) {
        if (r.postal_code.empty()) {
            result.rejected.push_back({r, RejectReason::Malformed, {}});
            continue;
        }
        Site& site = result.sites[r.postal_code];
        site.site_id = r.postal_code;
        site.postal_code = r.postal_code;
        site.station_ids.insert(r.station_id);
        outlets[r.postal_code].insert(r.outlet_id);
    }
    for (auto& [postal, site] : result.sites) {
        site.num_chargers = static_cast<int>(std::max<std::size_t>(1, outlets[postal].size()));
        site.charger_levels.assign(site.station_ids.size(), ChargerLevel::L2);
        if (manifest) {
            if (auto it = manifest->find(postal); it != manifest->end()) {
                site.num_chargers = it->second.num_chargers;
                if (!it->second.levels.empty()) site.charger_levels = it->second.levels;
            }
        }
    }
    return result;
}

SiteManifest parse_manifest(std::istream& in) { return read_manifest_rows(in, "site manifest"); }

SiteManifest parse_sites(std::istream& in) { return read_manifest_rows(in, "sites"); }

void write_sites(std::ostream& out, const std::map<std::string, Site>& sites) {
    csv::write_row(out, {"site_id", "postal_code", "num_chargers", "levels", "station_ids"});
    for (const auto& [postal, site] : sites) {
        std::string levels, stations;
        for (std::size_t i = 0; i < site.charger_levels.size(); ++i) {
            if (i) levels += ';';
            levels += level_name(site.charger_levels[i]);
        }
        for (const auto& s : site.station_ids) {
            if (!stations.empty()) stations += ';';
            stations += s;
        }
        csv::write_row(out, {site.site_id, site.postal_code, std::to_string(site.num_chargers),
                             levels, stations});
    }
}

OccupancyTimeline build_occupancy_timeline(const Site& site,
                                           const std::vector<SessionRecord>& sessions,
                                           Timestamp window_start, Timestamp window_end) {
    if (window_end <= window_start) throw ArgumentError("occupancy window: end must follow start");
    if (window_start.time_since_epoch() % Minutes{1} != Seconds{0} ||
        window_end.time_since_epoch() % Minutes{1} != Seconds{0}) {
        throw ArgumentError("occupancy window must be aligned to whole minutes");
    }
    if (site.num_chargers < 1) throw ArgumentError("site must have at least one charger");

    const auto slots = static_cast<std::size_t>((window_end - window_start) / Minutes{1});
    std::vector<long long> delta(slots + 1, 0);
    for (const auto& s : sessions) {
        const Timestamp lo = std::max(s.start_time, window_start);
        const Timestamp hi = std::min(s.end_time, window_end);
        if (hi <= lo) continue;
        const auto first = static_cast<std::size_t>((lo - window_start).count() / 60);
        const auto last_excl = static_cast<std::size_t>(((hi - window_start).count() + 59) / 60);
        ++delta[first];
        --delta[last_excl];
    }

    OccupancyTimeline tl;
    tl.site_id = site.site_id;
    tl.window_start = window_start;
    tl.num_chargers = site.num_chargers;
    tl.counts.resize(slots);
    long long running = 0;
    for (std::size_t i = 0; i < slots; ++i) {
        running += delta[i];
        if (running > site.num_chargers) {
            tl.counts[i] = site.num_chargers;
            ++tl.capped_slots;
        } else {
            tl.counts[i] = static_cast<int>(running);
        }
    }
    return tl;
}

}  // namespace evqoe::ingest
