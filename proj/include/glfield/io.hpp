#ifndef GLFIELD_IO_HPP
#define GLFIELD_IO_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "glfield/errors.hpp"
#include "glfield/event_log.hpp"
#include "glfield/rate_field.hpp"

namespace glfield {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << content;
}

inline std::string event_log_csv(const EventLog& log,
                                 const std::vector<double>& sites) {
    std::ostringstream out;
    out << "t,m,x,kind\n";
    for (const Event& e : log.events)
        out << format_double(e.t) << ',' << (e.replica + 1) << ','
            << format_double(sites[e.site]) << ','
            << (e.kind == EventKind::Spike ? "spike" : "threshold_reset")
            << '\n';
    return out.str();
}

inline std::string routing_csv(const EventLog& log,
                               const std::vector<double>& sites) {
    std::ostringstream out;
    out << "t,source_m,source_x,target_m,target_x\n";
    for (const RoutingRecord& r : log.routing)
        out << format_double(r.t) << ',' << (r.source_replica + 1) << ','
            << format_double(sites[r.source_site]) << ','
            << (r.target_replica + 1) << ','
            << format_double(sites[r.target_site]) << '\n';
    return out.str();
}

inline std::string trajectories_csv(const std::vector<double>& times,
                                    const std::vector<std::vector<double>>& snaps,
                                    std::size_t m_replicas,
                                    const std::vector<double>& sites) {
    std::ostringstream out;
    out << "t,m,x,lambda\n";
    std::size_t k = sites.size();
    for (std::size_t j = 0; j < times.size(); ++j)
        for (std::size_t m = 0; m < m_replicas; ++m)
            for (std::size_t x = 0; x < k; ++x)
                out << format_double(times[j]) << ',' << (m + 1) << ','
                    << format_double(sites[x]) << ','
                    << format_double(snaps[j][m * k + x]) << '\n';
    return out.str();
}

inline std::string rate_field_csv(const RateField& field) {
    std::ostringstream out;
    out << "x,t,m\n";
    for (std::size_t i = 0; i < field.sites().size(); ++i)
        for (std::size_t j = 0; j < field.knots().size(); ++j)
            out << format_double(field.sites()[i]) << ','
                << format_double(field.knots()[j]) << ','
                << format_double(field.values()[i][j]) << '\n';
    return out.str();
}

// 64-bit FNV-1a content hash, hex-encoded. Used only to compare runs for
// reproducibility, not for security.
inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
    return buf;
}

inline std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_hex(ss.str());
}

// Minimal SVG line chart: one polyline per series over a log-log or linear
// frame. Presentation-only output; no check depends on these files.
struct SvgSeries {
    std::string label;
    std::string color;
    std::vector<double> x;
    std::vector<double> y;
};

inline std::string svg_line_chart(const std::string& title,
                                  const std::vector<SvgSeries>& series,
                                  bool log_log = false) {
    const double w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 40;
    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    auto tx = [&](double v) { return log_log ? std::log10(std::max(v, 1e-300)) : v; };
    for (const SvgSeries& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x_min = std::min(x_min, tx(s.x[i]));
            x_max = std::max(x_max, tx(s.x[i]));
            y_min = std::min(y_min, tx(s.y[i]));
            y_max = std::max(y_max, tx(s.y[i]));
        }
    if (!(x_max > x_min))
        x_max = x_min + 1;
    if (!(y_max > y_min))
        y_max = y_min + 1;
    auto px = [&](double v) {
        return ml + (tx(v) - x_min) / (x_max - x_min) * (w - ml - mr);
    };
    auto py = [&](double v) {
        return h - mb - (tx(v) - y_min) / (y_max - y_min) * (h - mt - mb);
    };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
        << "\" height=\"" << h << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n"
        << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr
        << "\" height=\"" << h - mt - mb
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    double ly = mt + 14;
    for (const SvgSeries& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        out << "\"/>\n";
        if (!s.label.empty()) {
            out << "<text x=\"" << ml + 8 << "\" y=\"" << ly
                << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
                << s.color << "\">" << s.label << "</text>\n";
            ly += 16;
        }
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace glfield

#endif
