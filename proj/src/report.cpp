#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "error.hpp"

namespace leadlag {

std::string CascadeChain::path_string() const {
    std::string out;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i) out += "->";
        out += symbols[i];
    }
    return out;
}

namespace {

struct Edge {
    std::size_t to;
    int lag;
};

struct CascadeGraph {
    std::vector<std::string> nodes;
    std::vector<std::vector<Edge>> out_edges;
    std::vector<std::vector<std::size_t>> in_nodes;
};

void enumerate_paths(const CascadeGraph& g, std::vector<std::size_t>& path,
                     std::vector<bool>& on_path, int lag_sum,
                     std::vector<CascadeChain>& chains) {
    std::size_t tail = path.back();
    bool extended = false;
    for (const Edge& e : g.out_edges[tail]) {
        if (on_path[e.to]) continue;
        extended = true;
        path.push_back(e.to);
        on_path[e.to] = true;
        enumerate_paths(g, path, on_path, lag_sum + e.lag, chains);
        on_path[e.to] = false;
        path.pop_back();
    }
    if (extended || path.size() < 3) return;
    // Tail is terminal; the path is maximal if the head cannot be prepended.
    for (std::size_t u : g.in_nodes[path.front()])
        if (!on_path[u]) return;
    CascadeChain chain;
    chain.cumulative_lag = lag_sum;
    for (std::size_t idx : path) chain.symbols.push_back(g.nodes[idx]);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        for (const Edge& e : g.out_edges[path[i]]) {
            if (e.to == path[i + 1]) {
                chain.lags.push_back(e.lag);
                break;
            }
        }
    }
    chains.push_back(std::move(chain));
}

bool has_cycle(const CascadeGraph& g, std::vector<std::string>& cycle_edges) {
    enum { White, Grey, Black };
    std::vector<int> color(g.nodes.size(), White);
    bool found = false;
    // Iterative DFS with an explicit stack of (node, next edge index).
    for (std::size_t s = 0; s < g.nodes.size(); ++s) {
        if (color[s] != White) continue;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{s, 0}};
        color[s] = Grey;
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            if (next < g.out_edges[u].size()) {
                std::size_t v = g.out_edges[u][next++].to;
                if (color[v] == Grey) {
                    found = true;
                    cycle_edges.push_back(g.nodes[u] + "->" + g.nodes[v]);
                } else if (color[v] == White) {
                    color[v] = Grey;
                    stack.push_back({v, 0});
                }
            } else {
                color[u] = Black;
                stack.pop_back();
            }
        }
    }
    return found;
}

} // namespace

CascadeReport detect_cascades(const std::vector<Stage2Row>& rows) {
    std::set<Granularity> grans;
    for (const Stage2Row& r : rows) grans.insert(r.granularity);
    if (grans.size() > 1)
        raise(Errc::DomainError, "cascade detection expects a single granularity");

    CascadeGraph g;
    std::map<std::string, std::size_t> index;
    auto node_id = [&](const std::string& s) {
        auto it = index.find(s);
        if (it != index.end()) return it->second;
        std::size_t id = g.nodes.size();
        index.emplace(s, id);
        g.nodes.push_back(s);
        g.out_edges.emplace_back();
        g.in_nodes.emplace_back();
        return id;
    };
    std::set<std::pair<std::string, std::string>> seen;
    for (const Stage2Row& r : rows) {
        if (!r.direction_confirmed || r.lag_bars < 1) continue;
        if (!seen.insert({r.leader, r.follower}).second) continue;
        std::size_t u = node_id(r.leader);
        std::size_t v = node_id(r.follower);
        g.out_edges[u].push_back({v, r.lag_bars});
        g.in_nodes[v].push_back(u);
    }
    for (auto& edges : g.out_edges)
        std::sort(edges.begin(), edges.end(),
                  [&](const Edge& a, const Edge& b) { return g.nodes[a.to] < g.nodes[b.to]; });

    CascadeReport report;
    report.cycle_detected = has_cycle(g, report.cycle_edges);
    std::sort(report.cycle_edges.begin(), report.cycle_edges.end());

    for (std::size_t s = 0; s < g.nodes.size(); ++s) {
        std::vector<std::size_t> path{s};
        std::vector<bool> on_path(g.nodes.size(), false);
        on_path[s] = true;
        enumerate_paths(g, path, on_path, 0, report.chains);
    }
    std::sort(report.chains.begin(), report.chains.end(),
              [](const CascadeChain& a, const CascadeChain& b) {
                  if (a.symbols.size() != b.symbols.size())
                      return a.symbols.size() > b.symbols.size();
                  if (a.cumulative_lag != b.cumulative_lag)
                      return a.cumulative_lag < b.cumulative_lag;
                  return a.symbols < b.symbols;
              });
    return report;
}

std::vector<IndustryRow> industry_report(const std::vector<Stage2Row>& rows,
                                         const std::string& map_path,
                                         std::vector<std::string>& warnings) {
    std::string text;
    if (!read_file(map_path, text))
        raise(Errc::MalformedMap, "cannot read industry map " + map_path);
    std::map<std::string, std::string> industry;
    {
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (line_no == 1 && line == "symbol,industry") continue;
            std::vector<std::string> f = split_csv_line(line);
            if (f.size() != 2 || f[0].empty() || f[1].empty())
                raise(Errc::MalformedMap, map_path + ":" + std::to_string(line_no) +
                                              ": expected symbol,industry");
            industry[f[0]] = f[1];
        }
    }

    auto lookup = [&](const std::string& symbol) {
        auto it = industry.find(symbol);
        if (it != industry.end()) return it->second;
        warnings.push_back("symbol " + symbol + " missing from industry map; grouped as Unknown");
        return std::string("Unknown");
    };

    struct Agg {
        std::size_t freq = 0;
        double abs_ccf_sum = 0.0;
        bool within = false;
    };
    std::map<std::string, Agg> groups;
    for (const Stage2Row& r : rows) {
        if (!r.direction_confirmed) continue;
        std::string li = lookup(r.leader);
        std::string fi = lookup(r.follower);
        bool within = li == fi;
        std::string label = within ? "Within " + li : li + " -> " + fi;
        Agg& agg = groups[label];
        agg.freq += 1;
        agg.within = within;
        if (!std::isnan(r.ccf_value)) agg.abs_ccf_sum += std::fabs(r.ccf_value);
    }

    std::vector<IndustryRow> out;
    out.reserve(groups.size());
    for (const auto& [label, agg] : groups) {
        IndustryRow row;
        row.label = label;
        row.within = agg.within;
        row.frequency = agg.freq;
        row.mean_abs_ccf = agg.freq ? agg.abs_ccf_sum / static_cast<double>(agg.freq) : 0.0;
        out.push_back(std::move(row));
    }
    std::sort(out.begin(), out.end(), [](const IndustryRow& a, const IndustryRow& b) {
        if (a.frequency != b.frequency) return a.frequency > b.frequency;
        return a.label < b.label;
    });
    return out;
}

std::string ranking_csv(const std::vector<Stage2Row>& rows) {
    std::string out = kRankingCsvHeader;
    out += '\n';
    for (const Stage2Row& r : rows) {
        if (!r.skip_reason.empty()) continue;
        out += r.leader;
        out += ',';
        out += r.follower;
        out += ',';
        out += r.lag_wallclock();
        out += ',';
        out += format_double(r.ccf_value);
        out += ',';
        out += format_double(r.granger_p);
        out += ',';
        out += format_double(r.r_squared);
        out += '\n';
    }
    return out;
}

std::string granularity_summary_csv(const std::vector<Stage2Row>& rows) {
    struct Agg {
        std::size_t total = 0;
        std::size_t significant = 0;
        std::size_t confirmed = 0;
        double abs_ccf_sum = 0.0;
        std::size_t abs_ccf_n = 0;
    };
    std::map<int, std::pair<Granularity, Agg>> per;
    auto order = [](Granularity g) {
        switch (g) {
            case Granularity::Min1: return 0;
            case Granularity::Min5: return 1;
            case Granularity::Min15: return 2;
            case Granularity::Daily: return 3;
        }
        return 3;
    };
    for (const Stage2Row& r : rows) {
        auto& slot = per[order(r.granularity)];
        slot.first = r.granularity;
        Agg& a = slot.second;
        ++a.total;
        if (r.ccf_significant) ++a.significant;
        if (r.direction_confirmed) ++a.confirmed;
        if (!std::isnan(r.ccf_value)) {
            a.abs_ccf_sum += std::fabs(r.ccf_value);
            ++a.abs_ccf_n;
        }
    }
    std::string out = "granularity,rows,ccf_significant,direction_confirmed,mean_abs_ccf\n";
    for (const auto& [ord, slot] : per) {
        const Agg& a = slot.second;
        out += granularity_label(slot.first);
        out += ',';
        out += std::to_string(a.total);
        out += ',';
        out += std::to_string(a.significant);
        out += ',';
        out += std::to_string(a.confirmed);
        out += ',';
        out += format_double(a.abs_ccf_n ? a.abs_ccf_sum / static_cast<double>(a.abs_ccf_n)
                                         : std::numeric_limits<double>::quiet_NaN());
        out += '\n';
    }
    return out;
}

} // namespace leadlag
