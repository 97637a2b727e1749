#include "hloc/evaluate.hpp"

#include <tuple>

#include "text.hpp"

namespace hloc {

std::string_view to_string(EvalCategory c)
{
    switch (c) {
    case EvalCategory::Same: return "same";
    case EvalCategory::Possible: return "possible";
    case EvalCategory::Wrong: return "wrong";
    case EvalCategory::NoData: return "no_data";
    case EvalCategory::NotApplicable: return "not_applicable";
    }
    return "?";
}

std::vector<ExternalAnswer> load_external_answers(const std::filesystem::path& path, const std::string& source,
                                                  std::vector<std::string>* warnings)
{
    auto in = text::open_input(path);
    std::vector<ExternalAnswer> out;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (text::read_line(in, line)) {
        ++line_no;
        if (text::is_blank_or_comment(line)) continue;
        if (!header) {
            header = true;
            if (line.starts_with("ip,")) continue;
        }
        const auto f = text::split_delimited(line, ',');
        auto warn = [&](const std::string& why) {
            if (warnings) warnings->push_back(path.string() + ":" + std::to_string(line_no) + ": " + why);
        };
        if (f.size() < 3) {
            warn("expected ip,lat,lon[,city]");
            continue;
        }
        const auto ip = IpAddress::parse(text::trim(f[0]));
        if (!ip) {
            warn("bad ip");
            continue;
        }
        ExternalAnswer a{*ip, source, std::nullopt, f.size() > 3 ? std::string(text::trim(f[3])) : ""};
        if (!text::trim(f[1]).empty() || !text::trim(f[2]).empty()) {
            const auto lat = text::parse_double(f[1]);
            const auto lon = text::parse_double(f[2]);
            if (!lat || !lon || !valid_coordinates({*lat, *lon})) {
                warn("bad coordinates");
                continue;
            }
            a.pos = LatLon{*lat, *lon};
        }
        out.push_back(std::move(a));
    }
    return out;
}

bool excluded_by_measurements(const LatLon& pos, const DomainVerdict& verdict, const ValidationConfig& cfg)
{
    for (const auto& m : verdict.measurements) {
        if (!m.rtt_ms) continue;
        const auto radius = exclusion_radius_km(*m.rtt_ms, cfg);
        if (radius && great_circle_km(m.origin_pos, pos) > *radius) return true;
    }
    return false;
}

EvaluationRecord classify(const ExternalAnswer& answer, const DomainVerdict& verdict, const ValidationConfig& cfg,
                          double same_radius_km)
{
    EvaluationRecord rec{answer.ip, answer.source, verdict.category, EvalCategory::Possible};
    if (verdict.category == VerdictCategory::Unresponsive || verdict.category == VerdictCategory::Filtered)
        rec.category = EvalCategory::NotApplicable;
    else if (!answer.pos)
        rec.category = EvalCategory::NoData;
    else if (excluded_by_measurements(*answer.pos, verdict, cfg))
        rec.category = EvalCategory::Wrong;
    else if (const auto* h = verdict.verified_hint();
             h && great_circle_km(*answer.pos, h->hint_pos) <= same_radius_km)
        rec.category = EvalCategory::Same;
    return rec;
}

std::vector<SummaryRow> summarize(const std::vector<EvaluationRecord>& records)
{
    std::map<std::pair<std::string, VerdictCategory>, SummaryRow> rows;
    for (const auto& r : records) {
        auto& row = rows[{r.source, r.verdict}];
        row.source = r.source;
        row.verdict = r.verdict;
        ++row.n;
        ++row.counts[r.category];
        if (r.category != EvalCategory::NotApplicable) ++row.applicable;
        if (r.category != EvalCategory::NotApplicable && r.category != EvalCategory::NoData) ++row.with_data;
    }
    std::vector<SummaryRow> out;
    for (auto& [key, row] : rows) {
        auto pct = [](std::size_t part, std::size_t whole) {
            return whole ? 100.0 * static_cast<double>(part) / static_cast<double>(whole) : 0.0;
        };
        row.same_pct = pct(row.counts[EvalCategory::Same], row.with_data);
        row.possible_pct = pct(row.counts[EvalCategory::Possible], row.with_data);
        row.wrong_pct = pct(row.counts[EvalCategory::Wrong], row.with_data);
        row.no_data_pct = pct(row.counts[EvalCategory::NoData], row.applicable);
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace hloc
