#include "bohmlab/io.hpp"

#include <cmath>
#include <ostream>

namespace bohmlab {

nlohmann::json to_json(const Grid& grid) {
    return {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"nx", grid.nx},
            {"t_min", grid.t_min}, {"t_max", grid.t_max}, {"nt", grid.nt}};
}

Grid grid_from_json(const nlohmann::json& j) {
    Grid g;
    g.x_min = j.at("x_min").get<double>();
    g.x_max = j.at("x_max").get<double>();
    g.nx = j.at("nx").get<int>();
    g.t_min = j.at("t_min").get<double>();
    g.t_max = j.at("t_max").get<double>();
    g.nt = j.at("nt").get<int>();
    g.validate();
    return g;
}

nlohmann::json to_json(const ResidualReport& report) {
    nlohmann::json j = {{"linf", report.linf},
                        {"l2", report.l2},
                        {"excluded_fraction", report.excluded_fraction},
                        {"grid", to_json(report.grid)}};
    if (std::isfinite(report.order))
        j["order"] = report.order;
    else
        j["order"] = nullptr;
    return j;
}

nlohmann::json to_json(const Field& field) {
    nlohmann::json j = {{"grid", to_json(field.grid)}, {"values", field.values}};
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < field.excluded.size(); ++i)
        if (field.excluded[i]) bad.push_back(i);
    if (!bad.empty()) j["excluded"] = bad;
    return j;
}

nlohmann::json to_json(const PropagationResult& result, const PropagationSetup& setup) {
    nlohmann::json snaps = nlohmann::json::array();
    for (const Snapshot& s : result.snapshots) {
        std::vector<double> re(s.psi.size()), im(s.psi.size());
        for (std::size_t i = 0; i < s.psi.size(); ++i) {
            re[i] = s.psi[i].real();
            im[i] = s.psi[i].imag();
        }
        snaps.push_back({{"t", s.t}, {"re", re}, {"im", im}});
    }
    return {{"grid", to_json(setup.grid)},
            {"dt", setup.dt},
            {"absorb_cells", setup.absorb_cells},
            {"norm_drift", result.norm_drift},
            {"dt_warning", result.dt_warning},
            {"snapshots", snaps}};
}

namespace {
void put(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}
} // namespace

void write_csv(std::ostream& os, const Field& field) {
    os << "x,t,value\n";
    const Grid& g = field.grid;
    for (int it = 0; it < g.nt; ++it)
        for (int ix = 0; ix < g.nx; ++ix) {
            if (field.is_excluded(it, ix)) continue;
            put(os, g.x(ix));
            os << ',';
            put(os, g.t(it));
            os << ',';
            put(os, field.at(it, ix));
            os << '\n';
        }
}

void write_csv(std::ostream& os, const PropagationResult& result,
               const PropagationSetup& setup) {
    os << "t,x,re,im\n";
    for (const Snapshot& s : result.snapshots)
        for (int i = 0; i < setup.grid.nx; ++i) {
            put(os, s.t);
            os << ',';
            put(os, setup.x(i));
            os << ',';
            put(os, s.psi[static_cast<std::size_t>(i)].real());
            os << ',';
            put(os, s.psi[static_cast<std::size_t>(i)].imag());
            os << '\n';
        }
}

} // namespace bohmlab
