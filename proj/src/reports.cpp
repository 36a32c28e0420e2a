#include "pairval/reports.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace pairval::eval {

using nlohmann::json;

namespace {

std::string num(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

std::string pareto_svg(std::span<const ParetoPoint> points, std::span<const std::size_t> front) {
    constexpr double kW = 640, kH = 480, kLeft = 70, kRight = 20, kTop = 30, kBottom = 60;
    double amin = 1.0, amax = 0.0;
    for (const auto& p : points) {
        amin = std::min(amin, p.accuracy);
        amax = std::max(amax, p.accuracy);
    }
    if (points.empty() || amax - amin < 1e-9) {
        amin = std::max(0.0, amin - 0.05);
        amax = std::min(1.0, amax + 0.05);
        if (amax <= amin) amax = amin + 0.1;
    }
    const double pad = (amax - amin) * 0.05;
    amin -= pad;
    amax += pad;
    auto sx = [&](double effort) { return kLeft + effort * (kW - kLeft - kRight); };
    auto sy = [&](double acc) { return kH - kBottom - (acc - amin) / (amax - amin) * (kH - kTop - kBottom); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
        << kW << ' ' << kH << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
        << "Accuracy vs human effort</text>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight << "\" y2=\"" << kH - kBottom
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kH - kBottom
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double e = i / 5.0;
        const double a = amin + (amax - amin) * i / 5.0;
        svg << "<text x=\"" << num(sx(e), 1) << "\" y=\"" << kH - kBottom + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(e, 1) << "</text>\n";
        svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(sy(a) + 4, 1)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(a, 3) << "</text>\n";
    }
    svg << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">human effort</text>\n";
    svg << "<text x=\"18\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 18 " << kH / 2
        << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">accuracy</text>\n";

    std::vector<bool> on_front(points.size(), false);
    for (auto i : front) on_front[i] = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (on_front[i]) continue;
        svg << "<circle cx=\"" << num(sx(points[i].effort), 2) << "\" cy=\"" << num(sy(points[i].accuracy), 2)
            << "\" r=\"2.5\" fill=\"#9aa5b1\" fill-opacity=\"0.7\"><title>" << escape_xml(points[i].config_id)
            << "</title></circle>\n";
    }
    std::vector<std::size_t> f(front.begin(), front.end());
    std::sort(f.begin(), f.end(), [&](std::size_t a, std::size_t b) { return points[a].effort < points[b].effort; });
    if (f.size() > 1) {
        svg << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
        for (auto i : f) svg << num(sx(points[i].effort), 2) << ',' << num(sy(points[i].accuracy), 2) << ' ';
        svg << "\"/>\n";
    }
    for (auto i : f) {
        svg << "<circle cx=\"" << num(sx(points[i].effort), 2) << "\" cy=\"" << num(sy(points[i].accuracy), 2)
            << "\" r=\"4.5\" fill=\"#c0392b\"><title>" << escape_xml(points[i].config_id) << "</title></circle>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string pareto_markdown(std::span<const ParetoPoint> points, std::span<const std::size_t> front) {
    std::vector<std::size_t> f(front.begin(), front.end());
    std::sort(f.begin(), f.end(), [&](std::size_t a, std::size_t b) { return points[a].effort < points[b].effort; });
    std::ostringstream md;
    md << "# Pareto front (" << f.size() << " of " << points.size() << " configurations)\n\n";
    md << "| configuration | accuracy | human effort |\n|---|---|---|\n";
    for (auto i : f) md << "| " << points[i].config_id << " | " << num(points[i].accuracy) << " | " << num(points[i].effort) << " |\n";
    return md.str();
}

json pareto_json(std::span<const ParetoPoint> points, std::span<const std::size_t> front) {
    json arr = json::array();
    for (auto i : front) {
        arr.push_back({{"config_id", points[i].config_id}, {"accuracy", points[i].accuracy}, {"human_effort", points[i].effort}});
    }
    return {{"input_points", points.size()}, {"front", arr}};
}

std::string grid_markdown(std::span<const RunResult> results) {
    std::ostringstream md;
    std::size_t failed = 0;
    for (const auto& r : results) failed += r.ok ? 0 : 1;
    md << "# Grid search (" << results.size() << " configurations, " << failed << " failed)\n\n";
    md << "| configuration | accuracy | human effort | iterations | status |\n|---|---|---|---|---|\n";
    for (const auto& r : results) {
        md << "| " << r.config_id << " | " << num(r.accuracy) << " | " << num(r.human_effort) << " | " << r.iterations
           << " | " << (r.ok ? "ok" : "failed: " + r.error) << " |\n";
    }
    return md.str();
}

}  // namespace pairval::eval
