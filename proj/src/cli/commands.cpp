#include "evqoe/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "evqoe/cli/provenance.hpp"
#include "evqoe/core/csv.hpp"
#include "evqoe/core/errors.hpp"
#include "evqoe/core/rng.hpp"
#include "evqoe/features.hpp"
#include "evqoe/forecast/backtest.hpp"
#include "evqoe/forecast/grid_search.hpp"
#include "evqoe/gapfill.hpp"
#include "evqoe/ingest.hpp"
#include "evqoe/mgk_sim.hpp"
#include "evqoe/qoe_metrics.hpp"
#include "evqoe/service_fit.hpp"

namespace evqoe::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string file_token(std::string_view site) {
    std::string out;
    for (char c : site) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

std::ifstream open_input(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open input file '{}'", p.string()));
    return in;
}

fs::path require_file(const Config& cfg, const std::string& key) {
    const auto p = cfg.path(key);
    if (!p) throw ArgumentError(fmt::format("missing required config key '{}'", key));
    if (!fs::is_regular_file(*p)) throw IoError(fmt::format("{}: file not found: '{}'", key, p->string()));
    return *p;
}

fs::path stage_file(const Config& cfg, const std::string& stage, const std::string& name) {
    return cfg.out_dir() / stage / name;
}

fs::path require_stage_file(const Config& cfg, const std::string& stage, const std::string& name) {
    const auto p = stage_file(cfg, stage, name);
    if (!fs::is_regular_file(p)) {
        throw IoError(fmt::format("expected output of stage '{}' not found: '{}'", stage, p.string()));
    }
    return p;
}

class StageWriter {
public:
    StageWriter(const Config& cfg, std::string stage) : cfg_(cfg), dir_(cfg.out_dir() / stage) {
        prov_.stage = std::move(stage);
        prov_.seed = cfg.seed();
        fs::create_directories(dir_);
    }

    void input(const fs::path& p) { prov_.add_input(p, label(p)); }

    std::ofstream csv(const std::string& name) {
        const auto p = dir_ / name;
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(fmt::format("cannot write '{}'", p.string()));
        prov_.write_csv_header(out);
        artifacts.push_back(p);
        return out;
    }

    void write_json(const std::string& name, const json& body) {
        json j;
        j["provenance"] = prov_.to_json();
        for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
        const auto p = dir_ / name;
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(fmt::format("cannot write '{}'", p.string()));
        out << j.dump(2) << '\n';
        artifacts.push_back(p);
    }

    Artifacts artifacts;

private:
    std::string label(const fs::path& p) const {
        const auto abs = fs::absolute(p).lexically_normal();
        for (const auto& root : {fs::absolute(cfg_.out_dir()).lexically_normal(), cfg_.base_dir()}) {
            if (root.empty()) continue;
            const auto rel = abs.lexically_relative(root);
            if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
        }
        return abs.generic_string();
    }

    const Config& cfg_;
    fs::path dir_;
    Provenance prov_;
};

bool site_selected(const Config& cfg, const std::string& site) {
    const auto filter = cfg.site_filter();
    return filter.empty() || std::find(filter.begin(), filter.end(), site) != filter.end();
}

ingest::CleaningRules cleaning_rules(const Config& cfg) {
    ingest::CleaningRules r;
    r.min_duration = Seconds{static_cast<long long>(std::llround(cfg.get_double("ingest.min_duration_min", 3) * 60))};
    r.max_duration = Seconds{static_cast<long long>(std::llround(cfg.get_double("ingest.max_duration_min", 120) * 60))};
    r.require_payment = cfg.get_bool("ingest.require_payment", true);
    r.require_energy = cfg.get_bool("ingest.require_energy", true);
    r.merge_gap = Seconds{cfg.get_int("ingest.merge_gap_s", 60)};
    r.validate();
    return r;
}

std::optional<Date> config_date(const Config& cfg, const std::string& key) {
    if (!cfg.has(key)) return std::nullopt;
    const auto d = parse_date(cfg.get(key, ""));
    if (!d) throw ArgumentError(fmt::format("config key '{}' is not an ISO date", key));
    return d;
}

json fit_json(const forecast::SarimaxFit& f) {
    json j;
    j["ar"] = f.ar_coeffs;
    j["ma"] = f.ma_coeffs;
    j["seasonal_ar"] = f.seasonal_ar;
    j["seasonal_ma"] = f.seasonal_ma;
    j["exog"] = f.exog_coeffs;
    j["intercept"] = f.intercept;
    return j;
}

json spec_json(const forecast::SarimaxSpec& s) {
    return json{{"p", s.p}, {"d", s.d}, {"q", s.q}, {"P", s.P}, {"D", s.D}, {"Q", s.Q},
                {"s", s.s}, {"n_exog", s.n_exog}, {"frac_truncation", s.frac_truncation}, {"label", s.label()}};
}

json accuracy_json(const forecast::AccuracyReport& a) {
    json j{{"mse", a.mse}, {"rmse", a.rmse}, {"mae", a.mae}};
    j["mape"] = a.mape ? json(*a.mape) : json(nullptr);
    j["mape_skipped"] = a.mape_skipped;
    return j;
}

std::vector<qoe::Band> parse_bands(const std::string& text) {
    // "[0,0.1);[0.1,0.3];(0.3,1]"
    std::vector<qoe::Band> bands;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
        if (item.size() < 5) throw ArgumentError(fmt::format("bad band '{}'", item));
        qoe::Band b;
        if (item.front() != '[' && item.front() != '(') throw ArgumentError(fmt::format("bad band '{}'", item));
        if (item.back() != ']' && item.back() != ')') throw ArgumentError(fmt::format("bad band '{}'", item));
        b.lo_closed = item.front() == '[';
        b.hi_closed = item.back() == ']';
        const auto comma = item.find(',');
        if (comma == std::string::npos) throw ArgumentError(fmt::format("bad band '{}'", item));
        const auto lo = csv::parse_double(item.substr(1, comma - 1));
        const auto hi = csv::parse_double(item.substr(comma + 1, item.size() - comma - 2));
        if (!lo || !hi) throw ArgumentError(fmt::format("bad band '{}'", item));
        b.lo = *lo;
        b.hi = *hi;
        bands.push_back(b);
    }
    qoe::validate_bands(bands);
    return bands;
}

std::map<std::string, ingest::Site> read_sites(const fs::path& p) {
    auto in = open_input(p);
    const auto manifest = ingest::parse_sites(in);
    std::map<std::string, ingest::Site> sites;
    for (const auto& [postal, entry] : manifest) {
        ingest::Site s;
        s.site_id = postal;
        s.postal_code = postal;
        s.num_chargers = entry.num_chargers;
        s.charger_levels = entry.levels;
        sites[postal] = s;
    }
    return sites;
}

std::vector<ingest::SessionRecord> read_clean_sessions(const fs::path& p) {
    auto in = open_input(p);
    auto pr = ingest::parse_sessions(in);
    if (!pr.rejected.empty()) {
        throw SchemaError(fmt::format("'{}' has {} unparseable rows", p.string(), pr.rejected.size()));
    }
    return std::move(pr.records);
}

std::map<std::string, std::vector<ingest::SessionRecord>> by_site(std::vector<ingest::SessionRecord> all) {
    std::map<std::string, std::vector<ingest::SessionRecord>> out;
    for (auto& r : all) out[r.postal_code].push_back(std::move(r));
    return out;
}

std::map<std::string, std::vector<qoe::DailyMetrics>> read_daily_metrics(const fs::path& p) {
    auto in = open_input(p);
    std::map<std::string, std::vector<qoe::DailyMetrics>> out;
    for (auto& row : qoe::parse_daily_metrics(in)) out[row.site_id].push_back(std::move(row));
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

Artifacts cmd_ingest(const Config& cfg) {
    const auto sessions_path = require_file(cfg, "input.sessions");
    const auto rules = cleaning_rules(cfg);
    StageWriter w(cfg, "ingest");
    w.input(sessions_path);

    ingest::SiteManifest manifest;
    const bool has_manifest = cfg.has("input.manifest");
    if (has_manifest) {
        const auto mp = require_file(cfg, "input.manifest");
        w.input(mp);
        auto in = open_input(mp);
        manifest = ingest::parse_manifest(in);
    }

    auto in = open_input(sessions_path);
    auto parsed = ingest::parse_sessions(in);
    const std::size_t n_input = parsed.records.size() + parsed.rejected.size();
    auto cleaned = ingest::clean_sessions(parsed.records, rules);
    const std::size_t n_valid = cleaned.valid.size();
    auto merged = ingest::merge_resumed_sessions(std::move(cleaned.valid), rules);
    auto clustered = ingest::cluster_sites(merged, has_manifest ? &manifest : nullptr);

    std::vector<ingest::RejectedRecord> rejected = std::move(parsed.rejected);
    rejected.insert(rejected.end(), cleaned.rejected.begin(), cleaned.rejected.end());
    rejected.insert(rejected.end(), clustered.rejected.begin(), clustered.rejected.end());

    std::map<std::string, ingest::Site> sites;
    for (auto& [postal, site] : clustered.sites) {
        if (site_selected(cfg, site.site_id)) sites.emplace(postal, std::move(site));
    }
    if (sites.empty()) throw InsufficientData("ingest: no sites left after cleaning and site filter");

    std::vector<ingest::SessionRecord> kept;
    for (const auto& r : merged) {
        if (sites.contains(r.postal_code)) kept.push_back(r);
    }

    json site_summary = json::object();
    const auto grouped = by_site(kept);
    for (const auto& [postal, site] : sites) {
        const auto it = grouped.find(postal);
        const auto& ss = it->second;
        Timestamp lo = ss.front().start_time, hi = ss.front().end_time;
        for (const auto& r : ss) {
            lo = std::min(lo, r.start_time);
            hi = std::max(hi, r.end_time);
        }
        const auto tl = ingest::build_occupancy_timeline(site, ss, Timestamp{date_of(lo)},
                                                         Timestamp{date_of(hi) + std::chrono::days{1}});
        if (tl.capped_slots > 0) {
            spdlog::warn("ingest: site {} has {} minute slots with more sessions than chargers", postal,
                         tl.capped_slots);
        }
        site_summary[postal] = {{"sessions", ss.size()}, {"num_chargers", site.num_chargers},
                                {"capped_slots", tl.capped_slots}};
    }

    std::map<std::string, std::size_t> reasons;
    for (const auto& r : rejected) ++reasons[std::string(ingest::to_string(r.reason))];

    {
        auto out = w.csv("sessions_clean.csv");
        ingest::write_sessions(out, kept);
    }
    {
        auto out = w.csv("rejections.csv");
        ingest::write_rejections(out, rejected);
    }
    {
        auto out = w.csv("sites.csv");
        ingest::write_sites(out, sites);
    }
    json summary;
    summary["input_records"] = n_input;
    summary["valid_records"] = n_valid;
    summary["merged_records"] = merged.size();
    summary["kept_records"] = kept.size();
    summary["rejected"] = reasons;
    summary["sites"] = site_summary;
    w.write_json("summary.json", summary);
    return w.artifacts;
}

// ---------------------------------------------------------------------------------------------

Artifacts cmd_metrics(const Config& cfg) {
    const auto sessions_path = require_stage_file(cfg, "ingest", "sessions_clean.csv");
    const auto sites_path = require_stage_file(cfg, "ingest", "sites.csv");
    const auto holidays_path = require_file(cfg, "input.holidays");
    StageWriter w(cfg, "metrics");
    w.input(sessions_path);
    w.input(sites_path);
    w.input(holidays_path);

    auto hin = open_input(holidays_path);
    const auto holidays = qoe::parse_holidays(hin);
    const auto sites = read_sites(sites_path);
    const auto sessions = by_site(read_clean_sessions(sessions_path));
    qoe::DelayRule rule;
    rule.threshold = Seconds{static_cast<long long>(std::llround(cfg.get_double("metrics.delay_min", 5) * 60))};
    const auto bands = cfg.has("metrics.bands") ? parse_bands(cfg.get("metrics.bands", "")) : qoe::default_bands();

    std::optional<Date> first = config_date(cfg, "metrics.start"), last = config_date(cfg, "metrics.end");
    if (!first || !last) {
        std::optional<Date> lo, hi;
        for (const auto& [_, ss] : sessions) {
            for (const auto& r : ss) {
                const Date a = date_of(r.start_time);
                if (!lo || a < *lo) lo = a;
                if (!hi || a > *hi) hi = a;
            }
        }
        if (!lo) throw InsufficientData("metrics: no sessions");
        if (!first) first = lo;
        if (!last) last = hi;
    }
    if (*last < *first) throw ArgumentError("metrics: end date precedes start date");

    std::vector<qoe::DailyMetrics> rows;
    for (const auto& [postal, site] : sites) {
        if (!site_selected(cfg, site.site_id)) continue;
        const auto it = sessions.find(postal);
        static const std::vector<ingest::SessionRecord> none;
        auto daily = qoe::daily_report(site, it == sessions.end() ? none : it->second, *first, *last, holidays, rule);
        rows.insert(rows.end(), daily.begin(), daily.end());
    }
    {
        auto out = w.csv("daily_metrics.csv");
        qoe::write_daily_metrics(out, rows);
    }
    {
        auto out = w.csv("threshold_summary.csv");
        bool header = true;
        for (auto m : {qoe::Metric::Utilization, qoe::Metric::Occupancy, qoe::Metric::Idleness, qoe::Metric::Blocking}) {
            std::ostringstream part;
            qoe::write_threshold_summary(part, qoe::threshold_summary(rows, m, bands), bands);
            std::string text = part.str();
            if (!header) text = text.substr(text.find('\n') + 1);
            header = false;
            out << text;
        }
    }
    if (cfg.has("input.registry")) {
        const auto reg_path = require_file(cfg, "input.registry");
        auto rin = open_input(reg_path);
        const auto registry = features::parse_registry(rin);
        long long chargers = 0;
        double power = 0.0;
        const double l2 = cfg.get_double("metrics.l2_power_kw", 7.2);
        const double l3 = cfg.get_double("metrics.l3_power_kw", 50.0);
        for (const auto& [_, s] : sites) {
            if (!site_selected(cfg, s.site_id)) continue;
            chargers += s.num_chargers;
            for (int i = 0; i < s.num_chargers; ++i) {
                const bool fast = static_cast<std::size_t>(i) < s.charger_levels.size() &&
                                  s.charger_levels[static_cast<std::size_t>(i)] == ingest::ChargerLevel::L3;
                power += fast ? l3 : l2;
            }
        }
        const double evs = registry.lookup("province", "evs", *last);
        const auto ratios = qoe::fleet_ratios(std::llround(evs), chargers, power);
        StageWriter fw(cfg, "metrics");
        fw.input(reg_path);
        fw.input(sites_path);
        fw.write_json("fleet_ratios.json", {{"date", format_date(*last)}, {"n_evs", evs}, {"n_chargers", chargers},
                                            {"total_power_kw", power}, {"evcr", ratios.evcr}, {"evcp", ratios.evcp}});
        w.artifacts.insert(w.artifacts.end(), fw.artifacts.begin(), fw.artifacts.end());
    }
    return w.artifacts;
}

// ---------------------------------------------------------------------------------------------

Artifacts cmd_fit_service(const Config& cfg) {
    const auto sessions_path = require_stage_file(cfg, "ingest", "sessions_clean.csv");
    const auto sites_path = require_stage_file(cfg, "ingest", "sites.csv");
    StageWriter w(cfg, "fit-service");
    w.input(sessions_path);
    w.input(sites_path);
    service::FitOptions opt;
    opt.bin_width = cfg.get_double("service.bin_width", 2.0);
    opt.k_max = static_cast<int>(cfg.get_int("service.k_max", 50));
    opt.min_samples = static_cast<std::size_t>(cfg.get_int("service.min_samples", 30));

    const auto sites = read_sites(sites_path);
    const auto sessions = by_site(read_clean_sessions(sessions_path));
    for (const auto& [postal, site] : sites) {
        if (!site_selected(cfg, site.site_id)) continue;
        std::vector<double> durations;
        if (const auto it = sessions.find(postal); it != sessions.end()) {
            for (const auto& r : it->second) durations.push_back(static_cast<double>(r.duration().count()) / 60.0);
        }
        const auto fit = service::fit_erlang(durations, opt);
        const auto hist = service::empirical_service_distribution(durations, opt.bin_width);
        const auto density = hist.density();
        {
            auto out = w.csv(fmt::format("duration_histogram_{}.csv", file_token(postal)));
            csv::write_row(out, {"bin_start_min", "bin_end_min", "empirical_density", "fitted_density"});
            for (std::size_t b = 0; b < density.size(); ++b) {
                csv::write_row(out, {csv::format_double(static_cast<double>(b) * hist.bin_width),
                                     csv::format_double(static_cast<double>(b + 1) * hist.bin_width),
                                     csv::format_fixed(density[b], 8),
                                     csv::format_fixed(service::erlang_pdf(hist.midpoint(b), fit.shape_k, fit.rate), 8)});
            }
        }
        w.write_json(fmt::format("erlang_fit_{}.json", file_token(postal)),
                     {{"site_id", site.site_id}, {"shape_k", fit.shape_k}, {"rate_per_min", fit.rate},
                      {"mean_min", fit.mean()}, {"rmse", fit.rmse}, {"sample_mean_min", fit.sample_mean},
                      {"sample_var", fit.sample_var}, {"n_samples", fit.n_samples},
                      {"moment_shape", fit.moment_shape}, {"bin_width_min", opt.bin_width}});
    }
    return w.artifacts;
}

// ---------------------------------------------------------------------------------------------

namespace {

gapfill::GapSpec gap_spec(const Config& cfg) {
    gapfill::GapSpec g;
    if (!cfg.get_bool("gapfill.enabled", true)) {
        g.gap_start = make_date(2000, 1, 2);
        g.gap_end = make_date(2000, 1, 1);
    }
    if (auto d = config_date(cfg, "gapfill.start")) g.gap_start = *d;
    if (auto d = config_date(cfg, "gapfill.end")) g.gap_end = *d;
    g.window_m = static_cast<int>(cfg.get_int("gapfill.window", 30));
    if (g.window_m < 1) throw ArgumentError("gapfill.window must be positive");
    return g;
}

}  // namespace

Artifacts cmd_gapfill(const Config& cfg) {
    const auto metrics_path = require_stage_file(cfg, "metrics", "daily_metrics.csv");
    StageWriter w(cfg, "gapfill");
    w.input(metrics_path);
    const auto gap = gap_spec(cfg);
    const int draws = static_cast<int>(cfg.get_int("gapfill.draws", 1));
    const auto daily = read_daily_metrics(metrics_path);
    std::uint64_t index = 0;
    for (const auto& [site, rows] : daily) {
        ++index;
        if (!site_selected(cfg, site)) continue;
        gapfill::DailySeries s;
        s.site_id = site;
        s.start_date = rows.front().date;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].date != s.start_date + std::chrono::days{static_cast<int>(i)}) {
                throw SchemaError(fmt::format("gapfill: daily metrics of {} are not contiguous", site));
            }
            s.values.push_back(rows[i].n_requests);
        }
        const auto filled = gapfill::fill_gap(s, gap, derive_seed(cfg.seed(), index), draws);
        {
            auto out = w.csv(fmt::format("filled_{}.csv", file_token(site)));
            gapfill::write_filled_series(out, filled);
        }
        const auto n_filled = std::count(filled.filled.begin(), filled.filled.end(), true);
        w.write_json(fmt::format("gapfill_{}.json", file_token(site)),
                     {{"site_id", site}, {"gap_start", format_date(gap.gap_start)}, {"gap_end", format_date(gap.gap_end)},
                      {"window", gap.effective_window()}, {"draws", draws}, {"filled_days", n_filled},
                      {"residual_samples", filled.residuals.samples.size()},
                      {"residual_mean", filled.residuals.mean()},
                      {"skipped_zero_trend", filled.residuals.skipped_zero_trend}});
    }
    return w.artifacts;
}

// ---------------------------------------------------------------------------------------------

namespace {

forecast::SarimaxGrid grid_from(const Config& cfg) {
    forecast::SarimaxGrid g;
    g.p = cfg.get_int_list("forecast.grid.p", g.p);
    g.q = cfg.get_int_list("forecast.grid.q", g.q);
    g.d = cfg.get_double_list("forecast.grid.d", g.d);
    g.P = cfg.get_int_list("forecast.grid.P", g.P);
    g.D = cfg.get_int_list("forecast.grid.D", g.D);
    g.Q = cfg.get_int_list("forecast.grid.Q", g.Q);
    g.s = static_cast<int>(cfg.get_int("forecast.s", 52));
    g.frac_truncation = static_cast<std::size_t>(cfg.get_int("forecast.truncation", 100));
    return g;
}

struct ExogChoice {
    std::string name;
    std::string scope;  // "province" or "region"
    std::string metric;
};

std::vector<ExogChoice> exog_choices(const Config& cfg) {
    std::vector<ExogChoice> out;
    for (const auto& item : cfg.get_list("forecast.exog")) {
        if (item == "none") continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ArgumentError(fmt::format("forecast.exog item '{}' must be scope:metric", item));
        ExogChoice c{item, item.substr(0, colon), item.substr(colon + 1)};
        if ((c.scope != "province" && c.scope != "region") || (c.metric != "evs" && c.metric != "evcs")) {
            throw ArgumentError(fmt::format("forecast.exog item '{}': scope is province|region, metric evs|evcs", item));
        }
        out.push_back(c);
    }
    return out;
}

std::vector<std::vector<double>> read_projection(const fs::path& p, const std::vector<std::string>& names,
                                                 Date first_week, std::size_t horizon) {
    auto in = open_input(p);
    csv::Reader reader(in);
    const auto header = reader.next();
    if (!header) throw SchemaError("exog projection: empty file");
    std::vector<std::string> cols{"week_start"};
    cols.insert(cols.end(), names.begin(), names.end());
    const auto idx = csv::require_columns(*header, cols, "exog projection");
    std::map<Date, std::vector<double>> rows;
    while (auto r = reader.next()) {
        const auto d = parse_date((*r)[idx[0]]);
        if (!d) throw SchemaError(fmt::format("exog projection: line {}: bad week_start", reader.line()));
        std::vector<double> vals;
        for (std::size_t k = 1; k < idx.size(); ++k) {
            const auto v = csv::parse_double((*r)[idx[k]]);
            if (!v) throw SchemaError(fmt::format("exog projection: line {}: bad value", reader.line()));
            vals.push_back(*v);
        }
        rows[*d] = std::move(vals);
    }
    std::vector<std::vector<double>> out(names.size());
    for (std::size_t h = 0; h < horizon; ++h) {
        const Date wk = first_week + std::chrono::days{7 * static_cast<int>(h)};
        const auto it = rows.find(wk);
        if (it == rows.end()) throw MissingExogData(fmt::format("exog projection has no row for week {}", format_date(wk)));
        for (std::size_t c = 0; c < names.size(); ++c) out[c].push_back(it->second[c]);
    }
    return out;
}

std::vector<forecast::ExternalPredictions> read_externals(const Config& cfg, StageWriter& w, const std::string& site) {
    // forecast.external = NAME=path[,NAME=path]; "{site}" in a path expands to the site token.
    std::vector<forecast::ExternalPredictions> out;
    for (const auto& item : cfg.get_list("forecast.external")) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ArgumentError(fmt::format("forecast.external item '{}' must be NAME=path", item));
        std::string path = item.substr(eq + 1);
        if (const auto pos = path.find("{site}"); pos != std::string::npos) path.replace(pos, 6, file_token(site));
        fs::path p(path);
        if (p.is_relative() && !cfg.base_dir().empty()) p = cfg.base_dir() / p;
        if (!fs::is_regular_file(p)) {
            spdlog::warn("forecast: external predictions '{}' not found for site {}", p.string(), site);
            out.push_back({item.substr(0, eq), {}, {}});
            continue;
        }
        w.input(p);
        auto in = open_input(p);
        out.push_back(forecast::parse_external_predictions(in, item.substr(0, eq)));
    }
    return out;
}

}  // namespace

Artifacts cmd_forecast(const Config& cfg) {
    const auto exog = exog_choices(cfg);
    std::optional<fs::path> registry_path;
    if (!exog.empty()) registry_path = require_file(cfg, "input.registry");
    const auto holidays_path = require_file(cfg, "input.holidays");
    const auto grid = grid_from(cfg);
    const auto V = static_cast<std::size_t>(cfg.get_int("forecast.validation_weeks", 52));
    const auto test_weeks = static_cast<std::size_t>(cfg.get_int("forecast.test_weeks", 52));
    const auto horizon = static_cast<std::size_t>(cfg.get_int("forecast.horizon", 104));
    const double level = cfg.get_double("forecast.level", 0.99);
    const double scale = cfg.get_double("forecast.exog_scale", 1.0);
    if (!(scale > 0.0)) throw ArgumentError("forecast.exog_scale must be positive");
    forecast::SarimaxFitOptions fit_opt;
    fit_opt.max_evaluations = static_cast<int>(cfg.get_int("forecast.max_evaluations", 2000));

    auto hin = open_input(holidays_path);
    const auto holidays = qoe::parse_holidays(hin);
    features::Registry registry;
    if (registry_path) {
        auto rin = open_input(*registry_path);
        registry = features::parse_registry(rin);
    }

    Artifacts all;
    const fs::path gap_dir = cfg.out_dir() / "gapfill";
    if (!fs::is_directory(gap_dir)) throw IoError(fmt::format("expected output of stage 'gapfill' not found: '{}'", gap_dir.string()));
    std::vector<fs::path> inputs;
    for (const auto& e : fs::directory_iterator(gap_dir)) {
        const auto name = e.path().filename().string();
        if (name.starts_with("filled_") && name.ends_with(".csv")) inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw InsufficientData("forecast: no filled series found");

    for (const auto& input : inputs) {
        const std::string token = input.stem().string().substr(7);
        std::string site = token;
        if (const auto sidecar = gap_dir / fmt::format("gapfill_{}.json", token); fs::is_regular_file(sidecar)) {
            auto sin = open_input(sidecar);
            site = json::parse(sin).at("site_id").get<std::string>();
        }
        if (!site_selected(cfg, site)) continue;
        StageWriter w(cfg, "forecast");
        w.input(input);
        w.input(holidays_path);
        if (registry_path) w.input(*registry_path);
        const auto externals = read_externals(cfg, w, site);

        auto in = open_input(input);
        const auto filled = gapfill::parse_filled_series(in, site);
        const auto& daily = filled.series;

        std::vector<features::NamedColumn> exog_daily;
        for (const auto& x : exog) {
            const std::string scope = x.scope == "region" ? "region:" + features::region_of(site) : x.scope;
            std::vector<double> col;
            for (std::size_t i = 0; i < daily.values.size(); ++i) {
                col.push_back(scale * registry.lookup(scope, x.metric, daily.start_date + std::chrono::days{static_cast<int>(i)}));
            }
            exog_daily.emplace_back(x.name, std::move(col));
        }
        const auto weekly = features::weekly_aggregate(daily, exog_daily);
        const std::size_t n = weekly.size();
        if (n <= test_weeks + V) {
            throw InsufficientData(fmt::format("forecast: site {} has {} weeks, need more than {}", site, n, test_weeks + V));
        }
        const std::size_t n_train = n - test_weeks;

        // Mean-encoded calendar columns, encoder fitted on the training weeks.
        {
            std::vector<std::string> month, wom;
            std::vector<bool> mask;
            for (std::size_t i = 0; i < n; ++i) {
                const auto f = features::calendar_features(weekly.week_starts[i], holidays);
                month.push_back(std::to_string(f.month));
                wom.push_back(std::to_string(f.week_of_month));
                mask.push_back(i < n_train);
            }
            const auto em = features::mean_encode("month_enc", month, weekly.y, mask);
            const auto ew = features::mean_encode("week_of_month_enc", wom, weekly.y, mask);
            std::vector<double> cm, cw;
            for (std::size_t i = 0; i < n; ++i) {
                cm.push_back(em.encode(month[i]));
                cw.push_back(ew.encode(wom[i]));
            }
            auto out = w.csv(fmt::format("weekly_features_{}.csv", token));
            features::write_feature_matrix(out, weekly, {{em.name, cm}, {ew.name, cw}});
        }

        const auto train = weekly.head(n_train);
        const auto gs = forecast::grid_search(train.y, train.exog, grid, V, fit_opt);
        {
            auto out = w.csv(fmt::format("leaderboard_{}.csv", token));
            csv::write_row(out, {"spec", "p", "d", "q", "P", "D", "Q", "s", "n_params", "validation_mape", "status"});
            for (const auto& e : gs.leaderboard) {
                const auto& s = e.spec;
                csv::write_row(out, {s.label(), std::to_string(s.p), csv::format_double(s.d), std::to_string(s.q),
                                     std::to_string(s.P), std::to_string(s.D), std::to_string(s.Q), std::to_string(s.s),
                                     std::to_string(s.n_params()), e.mape ? csv::format_fixed(*e.mape, 4) : "NA",
                                     e.mape ? "ok" : e.failure});
            }
        }

        // Baselines: ARIMA searched over the non-seasonal part of the grid.
        auto models = forecast::default_models(gs.best);
        {
            auto ng = grid;
            ng.P = {0};
            ng.D = {0};
            ng.Q = {0};
            try {
                models.arima = forecast::grid_search(train.y, {}, ng, V, fit_opt).best;
            } catch (const std::exception& e) {
                spdlog::warn("forecast: ARIMA baseline search failed for {}: {}", site, e.what());
            }
        }
        const auto bt = forecast::backtest(weekly, n_train, test_weeks, models, externals);
        {
            auto out = w.csv(fmt::format("backtest_{}.csv", token));
            forecast::write_backtest_table(out, bt.rows);
        }

        // Final model on the whole series.
        const auto fit = forecast::fit_sarimax(weekly.y, weekly.exog, gs.best, fit_opt);
        const Date next_week = weekly.week_starts.back() + std::chrono::days{7};
        std::vector<std::vector<double>> future;
        std::string exog_source = "none";
        if (!exog.empty()) {
            if (cfg.has("input.exog_projection")) {
                const auto pp = require_file(cfg, "input.exog_projection");
                future = read_projection(pp, weekly.exog_names, next_week, horizon);
                exog_source = "projection";
            } else {
                for (const auto& col : weekly.exog) future.push_back(forecast::extrapolate_linear(col, horizon));
                exog_source = "linear_extrapolation";
            }
        }
        const auto fc = forecast::forecast(fit, horizon, future, level);
        {
            auto out = w.csv(fmt::format("forecast_{}.csv", token));
            csv::write_row(out, {"week_start", "point", "lower", "upper"});
            for (std::size_t h = 0; h < horizon; ++h) {
                csv::write_row(out, {format_date(next_week + std::chrono::days{7 * static_cast<int>(h)}),
                                     csv::format_fixed(fc.point[h], 4), csv::format_fixed(fc.lower[h], 4),
                                     csv::format_fixed(fc.upper[h], 4)});
            }
        }
        json acc;
        acc["validation_mape"] = gs.best_mape;
        for (const auto& r : bt.rows) {
            if (r.model == "SARIMAX") acc["backtest"] = r.report ? accuracy_json(*r.report) : json(r.failure);
        }
        w.write_json(fmt::format("forecast_{}.json", token),
                     {{"site_id", site}, {"spec", spec_json(gs.best)}, {"coefficients", fit_json(fit)},
                      {"sigma2", fit.sigma2}, {"converged", fit.converged}, {"css", fit.css}, {"n_obs", fit.n_obs},
                      {"level", level}, {"horizon", horizon}, {"exog", weekly.exog_names}, {"exog_source", exog_source},
                      {"accuracy_on_validation", acc}});
        all.insert(all.end(), w.artifacts.begin(), w.artifacts.end());
    }
    return all;
}

// ---------------------------------------------------------------------------------------------

Artifacts cmd_simulate(const Config& cfg) {
    const auto sites_path = require_stage_file(cfg, "ingest", "sites.csv");
    const auto metrics_path = require_stage_file(cfg, "metrics", "daily_metrics.csv");
    const std::string source = cfg.get("simulate.source", "forecast");
    if (source != "forecast" && source != "history") throw ArgumentError("simulate.source must be forecast or history");
    sim::SimConfig base;
    base.arrivals_per_round = static_cast<int>(cfg.get_int("simulate.arrivals", 25000));
    base.rounds = static_cast<int>(cfg.get_int("simulate.rounds", 30));
    base.warmup_arrivals = static_cast<int>(cfg.get_int("simulate.warmup", 1000));
    const double level = cfg.get_double("simulate.level", 0.95);
    const double bin = cfg.get_double("simulate.histogram_bin_min", 1.0);
    const auto history_days = static_cast<std::size_t>(cfg.get_int("simulate.history_days", 364));

    const auto sites = read_sites(sites_path);
    const auto daily = read_daily_metrics(metrics_path);
    Artifacts all;
    std::uint64_t index = 0;
    for (const auto& [postal, site] : sites) {
        ++index;
        if (!site_selected(cfg, site.site_id)) continue;
        const std::string token = file_token(postal);
        StageWriter w(cfg, "simulate");
        const auto fit_path = require_stage_file(cfg, "fit-service", fmt::format("erlang_fit_{}.json", token));
        w.input(sites_path);
        w.input(metrics_path);
        w.input(fit_path);
        auto fin = open_input(fit_path);
        const auto fit = json::parse(fin);
        const sim::ErlangService law{fit.at("shape_k").get<int>(), fit.at("rate_per_min").get<double>()};

        const auto dit = daily.find(postal);
        if (dit == daily.end()) throw InsufficientData(fmt::format("simulate: no daily metrics for {}", postal));
        std::vector<double> hist;
        for (const auto& r : dit->second) hist.push_back(r.n_requests);
        const int first_wd = weekday_index(dit->second.front().date);

        std::vector<double> day_counts;
        if (source == "forecast") {
            const auto fc_path = require_stage_file(cfg, "forecast", fmt::format("forecast_{}.csv", token));
            w.input(fc_path);
            auto in = open_input(fc_path);
            csv::Reader reader(in);
            const auto header = reader.next();
            if (!header) throw SchemaError("forecast file is empty");
            const auto idx = csv::require_columns(*header, {"week_start", "point"}, "forecast");
            std::vector<double> weekly;
            while (auto r = reader.next()) {
                const auto v = csv::parse_double((*r)[idx[1]]);
                if (!v) throw SchemaError("forecast file has a bad point value");
                weekly.push_back(*v);
                if (weekly.size() == 52) break;
            }
            day_counts = sim::disaggregate_weekly(weekly, sim::weekday_profile(hist, first_wd));
        } else {
            const std::size_t from = hist.size() > history_days ? hist.size() - history_days : 0;
            day_counts.assign(hist.begin() + static_cast<std::ptrdiff_t>(from), hist.end());
        }
        const auto rates = sim::daily_arrival_rates(day_counts);
        if (rates.empty()) throw InsufficientData(fmt::format("simulate: no demand days for {}", postal));
        double mean_rate = 0.0;
        for (double r : rates) mean_rate += r;
        mean_rate /= static_cast<double>(rates.size());
        const double peak_rate = *std::max_element(rates.begin(), rates.end());

        json scenarios = json::array();
        std::vector<double> peak_waits;
        int scenario_index = 0;
        for (const auto& [name, rate] : {std::pair<std::string, double>{"mean_day", mean_rate}, {"peak_day", peak_rate}}) {
            auto sc = base;
            sc.arrival_rate = rate;
            sc.num_servers = site.num_chargers;
            sc.service = law;
            sc.seed = derive_seed(cfg.seed(), index * 16 + static_cast<std::uint64_t>(scenario_index++));
            json js{{"name", name}, {"arrival_rate_per_min", rate}, {"arrivals_per_day", rate * 1440.0},
                    {"num_servers", sc.num_servers}, {"load", sc.arrival_rate > 0 ? sc.load() : 0.0}};
            if (rate <= 0.0) {
                js["mean_wait_min"] = 0.0;
                js["note"] = "no arrivals";
                scenarios.push_back(js);
                continue;
            }
            const auto rep = sim::replicate(sc, level);
            const auto& agg = rep.aggregate;
            js["mean_wait_min"] = agg.mean_wait;
            js["mean_wait_ci"] = {{"level", level}, {"lower", rep.mean_wait_ci.lower}, {"upper", rep.mean_wait_ci.upper}};
            js["p_zero_wait"] = agg.p_zero_wait;
            js["p99_wait_min"] = agg.p99_wait;
            js["delayed_fraction"] = static_cast<double>(agg.n_delayed) / static_cast<double>(agg.waiting_times.size());
            js["mean_queue_length"] = agg.mean_queue_length;
            js["rounds"] = sc.rounds;
            js["arrivals_per_round"] = sc.arrivals_per_round;
            js["unstable"] = agg.unstable;
            if (!agg.note.empty()) js["note"] = agg.note;
            scenarios.push_back(js);
            if (name == "peak_day") peak_waits = agg.waiting_times;
        }
        {
            auto out = w.csv(fmt::format("wait_histogram_{}.csv", token));
            csv::write_row(out, {"bin_start_min", "density"});
            if (!peak_waits.empty()) {
                for (const auto& [start, dens] : sim::waiting_histogram(peak_waits, bin)) {
                    csv::write_row(out, {csv::format_double(start), csv::format_fixed(dens, 8)});
                }
            }
        }
        w.write_json(fmt::format("sim_{}.json", token),
                     {{"site_id", site.site_id}, {"source", source},
                      {"service", {{"law", "erlang"}, {"shape_k", law.shape_k}, {"rate_per_min", law.rate}}},
                      {"scenarios", scenarios}});
        all.insert(all.end(), w.artifacts.begin(), w.artifacts.end());
    }
    return all;
}

// ---------------------------------------------------------------------------------------------

synth::SynthConfig synth_config_from(const Config& cfg) {
    auto c = synth::reference_config();
    c.seed = cfg.seed();
    if (auto d = config_date(cfg, "synth.start")) c.start = *d;
    if (auto d = config_date(cfg, "synth.end")) c.end = *d;
    if (!cfg.get_bool("synth.gap", true)) {
        c.gap.reset();
    } else {
        if (auto d = config_date(cfg, "synth.gap_start")) c.gap->start = *d;
        if (auto d = config_date(cfg, "synth.gap_end")) c.gap->end = *d;
        c.gap->suppression = cfg.get_double("synth.suppression", c.gap->suppression);
    }
    c.tariff_per_kwh = cfg.get_double("synth.tariff_per_kwh", c.tariff_per_kwh);
    c.accounts_per_site = static_cast<int>(cfg.get_int("synth.accounts_per_site", c.accounts_per_site));
    c.max_delay_hours = cfg.get_double("synth.max_delay_hours", c.max_delay_hours);
    auto& g = c.registry_growth;
    g.initial_evs = cfg.get_double("synth.registry.initial_evs", g.initial_evs);
    g.evs_per_month = cfg.get_double("synth.registry.evs_per_month", g.evs_per_month);
    g.initial_evcs = cfg.get_double("synth.registry.initial_evcs", g.initial_evcs);
    g.evcs_per_month = cfg.get_double("synth.registry.evcs_per_month", g.evcs_per_month);

    if (cfg.has("synth.sites")) {
        std::vector<synth::SiteConfig> sites;
        for (const auto& id : cfg.get_list("synth.sites")) {
            synth::SiteConfig s;
            for (const auto& ref : c.sites) {
                if (ref.site_id == id) s = ref;
            }
            s.site_id = id;
            sites.push_back(s);
        }
        c.sites = sites;
    }
    for (auto& s : c.sites) {
        const std::string p = "site." + s.site_id + ".";
        s.postal_code = cfg.get(p + "postal_code", s.postal_code);
        s.num_chargers = static_cast<int>(cfg.get_int(p + "num_chargers", s.num_chargers));
        s.base_rate = cfg.get_double(p + "base_rate", s.base_rate);
        s.annual_amplitude = cfg.get_double(p + "annual_amplitude", s.annual_amplitude);
        s.growth_per_year = cfg.get_double(p + "growth_per_year", s.growth_per_year);
        s.shape_k = static_cast<int>(cfg.get_int(p + "shape_k", s.shape_k));
        s.service_rate = cfg.get_double(p + "service_rate", s.service_rate);
        s.power_kw = cfg.get_double(p + "power_kw", s.power_kw);
        if (cfg.has(p + "weekday_profile")) {
            const auto w = cfg.get_double_list(p + "weekday_profile", {});
            if (w.size() != 7) throw ArgumentError(p + "weekday_profile needs 7 weights");
            std::copy(w.begin(), w.end(), s.weekday_profile.begin());
        }
    }
    c.validate();
    return c;
}

Artifacts cmd_synth(const Config& cfg) {
    const auto c = synth_config_from(cfg);
    StageWriter w(cfg, "synth");
    const auto out = synth::generate_sessions(c);
    {
        auto f = w.csv("sessions.csv");
        ingest::write_sessions(f, out.sessions);
    }
    {
        auto f = w.csv("manifest.csv");
        synth::write_manifest(f, c);
    }
    {
        auto f = w.csv("registry.csv");
        features::write_registry(f, out.truth.registry);
    }
    {
        auto f = w.csv("holidays.txt");
        for (int y = year_of(c.start); y <= year_of(c.end); ++y) {
            for (const auto& [m, d] : {std::pair{1, 1}, {7, 1}, {12, 25}}) {
                const Date h = make_date(y, m, d);
                if (h >= c.start && h <= c.end) f << format_date(h) << '\n';
            }
        }
    }
    {
        std::ostringstream truth;
        synth::write_ground_truth(truth, out.truth);
        w.write_json("ground_truth.json", json::parse(truth.str()));
    }
    {
        // Ready-to-run pipeline config next to the generated data.
        const fs::path p = cfg.out_dir() / "synth" / "pipeline.ini";
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError(fmt::format("cannot write '{}'", p.string()));
        f << "# Pipeline configuration for the synthetic dataset in this directory.\n"
          << "seed = " << c.seed << "\n\n"
          << "[input]\nsessions = sessions.csv\nmanifest = manifest.csv\nholidays = holidays.txt\n"
          << "registry = registry.csv\n\n";
        if (c.gap) {
            f << "[gapfill]\nstart = " << format_date(c.gap->start) << "\nend = " << format_date(c.gap->end)
              << "\nwindow = 30\n\n";
        } else {
            f << "[gapfill]\nenabled = false\n\n";
        }
        f << "[forecast]\nexog = region:evs\nhorizon = 104\nlevel = 0.99\n\n"
          << "[simulate]\nrounds = 30\narrivals = 25000\n";
        w.artifacts.push_back(p);
    }
    return w.artifacts;
}

// ---------------------------------------------------------------------------------------------

const std::vector<std::string>& pipeline_stages() {
    static const std::vector<std::string> stages{"ingest", "metrics", "fit-service", "gapfill", "forecast", "simulate"};
    return stages;
}

void validate_inputs(const Config& cfg, const std::string& stage) {
    auto need = [&](const std::string& key) { require_file(cfg, key); };
    auto maybe = [&](const std::string& key) {
        if (cfg.has(key)) require_file(cfg, key);
    };
    if (stage == "ingest" || stage == "pipeline") {
        need("input.sessions");
        maybe("input.manifest");
    }
    if (stage == "metrics" || stage == "pipeline") need("input.holidays");
    if (stage == "metrics") maybe("input.registry");
    if (stage == "forecast" || stage == "pipeline") {
        need("input.holidays");
        if (!exog_choices(cfg).empty()) need("input.registry");
        maybe("input.exog_projection");
        grid_from(cfg);
    }
    if (stage == "gapfill" || stage == "pipeline") gap_spec(cfg);
    if (stage == "ingest" || stage == "pipeline") cleaning_rules(cfg);
    cfg.seed();
}

namespace {

Artifacts dispatch(const std::string& stage, const Config& cfg) {
    if (stage == "ingest") return cmd_ingest(cfg);
    if (stage == "metrics") return cmd_metrics(cfg);
    if (stage == "fit-service") return cmd_fit_service(cfg);
    if (stage == "gapfill") return cmd_gapfill(cfg);
    if (stage == "forecast") return cmd_forecast(cfg);
    if (stage == "simulate") return cmd_simulate(cfg);
    if (stage == "synth") return cmd_synth(cfg);
    throw ArgumentError(fmt::format("unknown stage '{}'", stage));
}

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const SchemaError*>(&e)) return "SchemaError";
    if (dynamic_cast<const IoError*>(&e)) return "IoError";
    if (dynamic_cast<const InsufficientData*>(&e)) return "InsufficientData";
    if (dynamic_cast<const MissingExogData*>(&e)) return "MissingExogData";
    if (dynamic_cast<const FitError*>(&e)) return "FitError";
    if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
    if (dynamic_cast<const ArgumentError*>(&e)) return "ArgumentError";
    return "Error";
}

}  // namespace

StageOutcome run_stage(const std::string& stage, const Config& cfg) {
    StageOutcome o;
    o.stage = stage;
    try {
        validate_inputs(cfg, stage);
        o.artifacts = dispatch(stage, cfg);
        o.ok = true;
    } catch (const std::exception& e) {
        o.error_type = error_type(e);
        o.message = e.what();
        spdlog::error("stage {} failed: {}: {}", stage, o.error_type, o.message);
        try {
            const fs::path dir = cfg.out_dir() / stage;
            fs::create_directories(dir);
            std::ofstream f(dir / "error.json", std::ios::binary | std::ios::trunc);
            f << json{{"stage", stage}, {"error", o.error_type}, {"message", o.message}}.dump(2) << '\n';
        } catch (const std::exception& inner) {
            spdlog::error("could not write error report: {}", inner.what());
        }
    }
    return o;
}

int cmd_pipeline(const Config& cfg, std::vector<StageOutcome>* outcomes) {
    std::vector<StageOutcome> local;
    auto& results = outcomes ? *outcomes : local;
    results.clear();
    json stages = json::array();
    bool failed = false;
    try {
        validate_inputs(cfg, "pipeline");
    } catch (const std::exception& e) {
        StageOutcome o{"pipeline", false, {}, error_type(e), e.what()};
        spdlog::error("pipeline configuration invalid: {}", o.message);
        results.push_back(o);
        return 2;
    }
    for (const auto& stage : pipeline_stages()) {
        json js{{"stage", stage}};
        if (failed) {
            js["status"] = "skipped";
            stages.push_back(js);
            continue;
        }
        auto o = run_stage(stage, cfg);
        js["status"] = o.ok ? "ok" : "failed";
        if (!o.ok) {
            failed = true;
            js["error"] = {{"type", o.error_type}, {"message", o.message}};
        }
        auto& arts = js["artifacts"] = json::array();
        const auto root = fs::absolute(cfg.out_dir()).lexically_normal();
        for (const auto& a : o.artifacts) {
            arts.push_back({{"path", fs::absolute(a).lexically_normal().lexically_relative(root).generic_string()},
                            {"sha256", sha256_file(a)}});
        }
        stages.push_back(js);
        results.push_back(std::move(o));
    }
    json manifest;
    manifest["tool"] = kToolName;
    manifest["version"] = kToolVersion;
    manifest["seed"] = cfg.seed();
    manifest["status"] = failed ? "failed" : "ok";
    manifest["stages"] = stages;
    fs::create_directories(cfg.out_dir());
    std::ofstream f(cfg.out_dir() / "manifest.json", std::ios::binary | std::ios::trunc);
    f << manifest.dump(2) << '\n';
    return failed ? 1 : 0;
}

}  // namespace evqoe::cli
