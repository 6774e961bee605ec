#include "rows.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "csv.hpp"
#include "error.hpp"

namespace leadlag {

const char* const kStage1CsvHeader =
    "symbol_a,symbol_b,n,pearson,dtw,dtw_norm,kendall_tau,composite,passed,skip_reason";

const char* const kStage2CsvHeader =
    "leader,follower,granularity,lag_bars,lag_wallclock,ccf_value,ccf_significant,"
    "granger_p,granger_p_reverse,granger_order,direction_confirmed,alpha,beta,"
    "r_squared,beta_t_pvalue,beta_ext,gamma_market,delta_autoreg,r_squared_ext,n,"
    "bonferroni_threshold,rank,dropped_controls,skip_reason";

const char* const kRankingCsvHeader = "leader,follower,lag,ccf,p_value,r_squared";

namespace {

std::string bool_str(bool b) { return b ? "true" : "false"; }

double parse_opt_double(const std::string& s) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::strtod(s.c_str(), nullptr);
}

} // namespace

std::string stage2_csv_row(const Stage2Row& r) {
    std::string out;
    out += r.leader;
    out += ',';
    out += r.follower;
    out += ',';
    out += granularity_label(r.granularity);
    out += ',';
    out += std::to_string(r.lag_bars);
    out += ',';
    out += r.lag_wallclock();
    out += ',';
    out += format_double(r.ccf_value);
    out += ',';
    out += bool_str(r.ccf_significant);
    out += ',';
    out += format_double(r.granger_p);
    out += ',';
    out += format_double(r.granger_p_reverse);
    out += ',';
    out += std::to_string(r.granger_order);
    out += ',';
    out += bool_str(r.direction_confirmed);
    out += ',';
    out += format_double(r.alpha);
    out += ',';
    out += format_double(r.beta);
    out += ',';
    out += format_double(r.r_squared);
    out += ',';
    out += format_double(r.beta_t_pvalue);
    out += ',';
    out += format_double(r.beta_ext);
    out += ',';
    out += format_double(r.gamma_market);
    out += ',';
    out += format_double(r.delta_autoreg);
    out += ',';
    out += format_double(r.r_squared_ext);
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    out += format_double(r.bonferroni_threshold);
    out += ',';
    out += std::to_string(r.rank);
    out += ',';
    out += r.dropped_controls;
    out += ',';
    out += r.skip_reason;
    return out;
}

Stage2Row stage2_row_from_csv(const std::vector<std::string>& f) {
    if (f.size() != 24)
        raise(Errc::ParseError,
              "stage2 row has " + std::to_string(f.size()) + " fields, expected 24");
    Stage2Row r;
    r.leader = f[0];
    r.follower = f[1];
    r.granularity = granularity_from_label(f[2]);
    r.lag_bars = static_cast<int>(std::strtol(f[3].c_str(), nullptr, 10));
    r.ccf_value = parse_opt_double(f[5]);
    r.ccf_significant = f[6] == "true";
    r.granger_p = parse_opt_double(f[7]);
    r.granger_p_reverse = parse_opt_double(f[8]);
    r.granger_order = static_cast<std::size_t>(std::strtoull(f[9].c_str(), nullptr, 10));
    r.direction_confirmed = f[10] == "true";
    r.alpha = parse_opt_double(f[11]);
    r.beta = parse_opt_double(f[12]);
    r.r_squared = parse_opt_double(f[13]);
    r.beta_t_pvalue = parse_opt_double(f[14]);
    r.beta_ext = parse_opt_double(f[15]);
    r.gamma_market = parse_opt_double(f[16]);
    r.delta_autoreg = parse_opt_double(f[17]);
    r.r_squared_ext = parse_opt_double(f[18]);
    r.n = static_cast<std::size_t>(std::strtoull(f[19].c_str(), nullptr, 10));
    r.bonferroni_threshold = parse_opt_double(f[20]);
    r.rank = static_cast<std::size_t>(std::strtoull(f[21].c_str(), nullptr, 10));
    r.dropped_controls = f[22];
    r.skip_reason = f[23];
    return r;
}

namespace {

int granularity_rank(Granularity g) {
    switch (g) {
        case Granularity::Min1: return 0;
        case Granularity::Min5: return 1;
        case Granularity::Min15: return 2;
        case Granularity::Daily: return 3;
    }
    return 3;
}

// NaN-aware comparison keys: missing p sorts last, missing |ccf| sorts last.
bool row_order(const Stage2Row& a, const Stage2Row& b) {
    bool ap = !std::isnan(a.granger_p), bp = !std::isnan(b.granger_p);
    if (ap != bp) return ap;
    if (ap && a.granger_p != b.granger_p) return a.granger_p < b.granger_p;
    bool ac = !std::isnan(a.ccf_value), bc = !std::isnan(b.ccf_value);
    if (ac != bc) return ac;
    if (ac && std::fabs(a.ccf_value) != std::fabs(b.ccf_value))
        return std::fabs(a.ccf_value) > std::fabs(b.ccf_value);
    if (a.granularity != b.granularity)
        return granularity_rank(a.granularity) < granularity_rank(b.granularity);
    if (a.leader != b.leader) return a.leader < b.leader;
    return a.follower < b.follower;
}

bool same_rank_key(const Stage2Row& a, const Stage2Row& b) {
    auto key = [](const Stage2Row& r) {
        double p = std::isnan(r.granger_p) ? 2.0 : r.granger_p;
        double c = std::isnan(r.ccf_value) ? -1.0 : std::fabs(r.ccf_value);
        return std::pair<double, double>(p, c);
    };
    return key(a) == key(b);
}

} // namespace

void sort_and_rank_rows(std::vector<Stage2Row>& rows) {
    std::sort(rows.begin(), rows.end(), row_order);
    std::size_t rank = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == 0 || !same_rank_key(rows[i], rows[i - 1])) ++rank;
        rows[i].rank = rank;
    }
}

} // namespace leadlag
