#include "bivol/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bivol/errors.hpp"
#include "bivol/io.hpp"

namespace bivol {

EndpointSummary endpoint_errors(
    const std::vector<std::pair<double, double>>& cases,
    const std::vector<std::string>& ids) {
    if (cases.empty())
        throw Error(ErrorCode::InvalidArgument, "no endpoint cases");
    EndpointSummary out;
    out.cases.reserve(cases.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        EndpointError e;
        e.case_id = i < ids.size() ? ids[i] : "case" + std::to_string(i + 1);
        e.ground_truth = cases[i].first;
        e.estimate = cases[i].second;
        e.delta_err = e.estimate - e.ground_truth;
        sum += e.delta_err;
        out.cases.push_back(std::move(e));
    }
    out.mean = sum / static_cast<double>(cases.size());
    if (cases.size() > 1) {
        double acc = 0.0;
        for (const auto& e : out.cases) {
            const double d = e.delta_err - out.mean;
            acc += d * d;
        }
        out.sd = std::sqrt(acc / static_cast<double>(cases.size() - 1));
        out.sd_defined = true;
    }
    return out;
}

AgreementStats bland_altman(
    const std::vector<std::pair<double, double>>& estimate_truth) {
    if (estimate_truth.size() < 2)
        throw Error(ErrorCode::TooFewPairs,
                    "Bland-Altman needs at least 2 pairs");
    AgreementStats out;
    out.n = estimate_truth.size();
    double sum = 0.0;
    out.points.reserve(out.n);
    for (const auto& [est, truth] : estimate_truth) {
        const double d = est - truth;
        sum += d;
        out.points.emplace_back(0.5 * (est + truth), d);
    }
    out.bias = sum / static_cast<double>(out.n);
    double acc = 0.0;
    for (const auto& [m, d] : out.points) {
        const double c = d - out.bias;
        acc += c * c;
    }
    out.sd_diff = std::sqrt(acc / static_cast<double>(out.n - 1));
    out.loa_upper = out.bias + 1.96 * out.sd_diff;
    out.loa_lower = out.bias - 1.96 * out.sd_diff;
    return out;
}

namespace {

// Truth accrued since the anchor time, oriented by context.
double truth_progress(const VolumeTrace& truth, MeasurementContext ctx,
                      double t_anchor, double t) {
    return ctx == MeasurementContext::Filling
               ? truth.at(t) - truth.at(t_anchor)
               : truth.at(t_anchor) - truth.at(t);
}

}  // namespace

std::vector<std::pair<double, double>> pair_with_truth(
    const std::vector<StepResult>& steps, const VolumeTrace& truth,
    MeasurementContext ctx) {
    if (steps.empty())
        throw Error(ErrorCode::InvalidArgument, "no steps to pair");
    if (truth.empty())
        throw Error(ErrorCode::InvalidArgument, "empty ground-truth trace");
    const double t0 = steps.front().t;
    std::vector<std::pair<double, double>> out;
    out.reserve(steps.size());
    for (const auto& s : steps)
        out.emplace_back(s.v_cum, truth_progress(truth, ctx, t0, s.t));
    return out;
}

std::vector<std::pair<double, double>> sample_agreement_pairs(
    const std::vector<StepResult>& steps, const VolumeTrace& truth,
    MeasurementContext ctx) {
    if (steps.empty())
        throw Error(ErrorCode::InvalidArgument, "no steps to sample");
    const double interval = ctx == MeasurementContext::Filling ? 60.0 : 5.0;
    const double t0 = steps.front().t;
    std::vector<std::pair<double, double>> out;
    double next_t = t0 + interval;
    for (const auto& s : steps) {
        if (s.t + 1e-9 < next_t) continue;
        out.emplace_back(s.v_cum, truth_progress(truth, ctx, t0, s.t));
        next_t += interval;
    }
    // always include the endpoint
    const auto& last = steps.back();
    if (out.empty() || last.t + 1e-9 >= next_t - interval + 1e-9) {
        const auto end_pair =
            std::make_pair(last.v_cum, truth_progress(truth, ctx, t0, last.t));
        if (out.empty() || out.back() != end_pair) out.push_back(end_pair);
    }
    return out;
}

// ----------------------------------------------------------- reporting

namespace svg {

struct Canvas {
    std::ostringstream body;
    double width = 0.0, height = 0.0;

    Canvas(double w, double h) : width(w), height(h) {}

    void line(double x1, double y1, double x2, double y2, const char* color,
              double stroke = 1.0, const char* dash = nullptr) {
        body << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2
             << "\" y2=\"" << y2 << "\" stroke=\"" << color
             << "\" stroke-width=\"" << stroke << "\"";
        if (dash) body << " stroke-dasharray=\"" << dash << "\"";
        body << "/>\n";
    }

    void circle(double x, double y, double r, const char* color) {
        body << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << r
             << "\" fill=\"" << color << "\" fill-opacity=\"0.7\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const char* color, double stroke = 1.5,
                  const char* dash = nullptr) {
        body << "<polyline fill=\"none\" stroke=\"" << color
             << "\" stroke-width=\"" << stroke << "\"";
        if (dash) body << " stroke-dasharray=\"" << dash << "\"";
        body << " points=\"";
        for (const auto& [x, y] : pts) body << x << ',' << y << ' ';
        body << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, int size = 12,
              const char* color = "#333") {
        body << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
             << "\" font-family=\"sans-serif\" fill=\"" << color << "\">" << s
             << "</text>\n";
    }

    std::string finish() const {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
            << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
            << height << "\">\n<rect width=\"100%\" height=\"100%\" "
            << "fill=\"white\"/>\n"
            << body.str() << "</svg>\n";
        return out.str();
    }
};

struct AxisMap {
    double xmin, xmax, ymin, ymax;
    double px0, px1, py0, py1;  // pixel box; py0 is the bottom

    double x(double v) const {
        return px0 + (v - xmin) / (xmax - xmin) * (px1 - px0);
    }
    double y(double v) const {
        return py0 - (v - ymin) / (ymax - ymin) * (py0 - py1);
    }
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

void axes(Canvas& c, const AxisMap& m, const std::string& xlabel,
          const std::string& ylabel) {
    c.line(m.px0, m.py0, m.px1, m.py0, "#000");
    c.line(m.px0, m.py0, m.px0, m.py1, "#000");
    c.text(m.px0, m.py0 + 28, num(m.xmin), 11);
    c.text(m.px1 - 30, m.py0 + 28, num(m.xmax), 11);
    c.text(m.px0 - 44, m.py0, num(m.ymin), 11);
    c.text(m.px0 - 44, m.py1 + 10, num(m.ymax), 11);
    c.text(0.5 * (m.px0 + m.px1), m.py0 + 44, xlabel, 12);
    c.text(m.px0 - 44, m.py1 - 10, ylabel, 12);
}

}  // namespace svg

void emit_report(const std::vector<CaseResult>& cases,
                 const std::filesystem::path& out_dir) {
    if (cases.empty())
        throw Error(ErrorCode::InvalidArgument, "no cases to report");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string());

    // endpoint table
    std::vector<std::pair<double, double>> endpoints;
    std::vector<std::string> ids;
    std::vector<std::pair<double, double>> agreement_pairs;
    for (const auto& c : cases) {
        if (c.steps.empty() || c.truth.empty())
            throw Error(ErrorCode::InvalidArgument,
                        "case " + c.id + " has no steps or truth");
        const auto paired = pair_with_truth(c.steps, c.truth, c.ctx);
        endpoints.emplace_back(paired.back().second, paired.back().first);
        ids.push_back(c.id);
        const auto sampled = sample_agreement_pairs(c.steps, c.truth, c.ctx);
        agreement_pairs.insert(agreement_pairs.end(), sampled.begin(),
                               sampled.end());
    }
    const auto summary = endpoint_errors(endpoints, ids);
    {
        std::ostringstream out;
        out << "case,gt_ml,ev_ml,delta_ml\n";
        for (const auto& e : summary.cases)
            out << e.case_id << ',' << format_double(e.ground_truth) << ','
                << format_double(e.estimate) << ',' << format_double(e.delta_err)
                << '\n';
        out << "mean,," << format_double(summary.mean) << ','
            << format_double(summary.sd) << '\n';
        write_text_file(out_dir / "endpoint.csv", out.str());
    }

    const auto ba = bland_altman(agreement_pairs);
    {
        std::ostringstream out;
        out << "n,bias_ml,sd_diff_ml,loa_lower_ml,loa_upper_ml\n";
        out << ba.n << ',' << format_double(ba.bias) << ','
            << format_double(ba.sd_diff) << ',' << format_double(ba.loa_lower)
            << ',' << format_double(ba.loa_upper) << '\n';
        write_text_file(out_dir / "agreement.csv", out.str());
    }

    // Bland-Altman scatter
    {
        svg::Canvas c(720, 480);
        double xmin = 0.0, xmax = 1.0, ymin = ba.loa_lower, ymax = ba.loa_upper;
        for (const auto& [m, d] : ba.points) {
            xmin = std::min(xmin, m);
            xmax = std::max(xmax, m);
            ymin = std::min(ymin, d);
            ymax = std::max(ymax, d);
        }
        const double pad = 0.08 * std::max(1.0, ymax - ymin);
        svg::AxisMap ax{xmin, xmax + 1.0, ymin - pad, ymax + pad, 70, 690, 420, 30};
        svg::axes(c, ax, "mean of estimate and truth (ml)",
                  "estimate - truth (ml)");
        c.line(ax.x(ax.xmin), ax.y(ba.bias), ax.x(ax.xmax), ax.y(ba.bias),
               "#1f77b4", 1.5);
        c.line(ax.x(ax.xmin), ax.y(ba.loa_upper), ax.x(ax.xmax),
               ax.y(ba.loa_upper), "#d62728", 1.0, "6,4");
        c.line(ax.x(ax.xmin), ax.y(ba.loa_lower), ax.x(ax.xmax),
               ax.y(ba.loa_lower), "#d62728", 1.0, "6,4");
        c.text(ax.px1 - 180, ax.y(ba.bias) - 6, "bias " + svg::num(ba.bias), 11,
               "#1f77b4");
        c.text(ax.px1 - 180, ax.y(ba.loa_upper) - 6,
               "+LoA " + svg::num(ba.loa_upper), 11, "#d62728");
        c.text(ax.px1 - 180, ax.y(ba.loa_lower) + 14,
               "-LoA " + svg::num(ba.loa_lower), 11, "#d62728");
        for (const auto& [m, d] : ba.points) c.circle(ax.x(m), ax.y(d), 3, "#333");
        write_text_file(out_dir / "bland_altman.svg", c.finish());
    }

    // stacked estimate-vs-truth traces
    {
        const double panel_h = 200.0;
        svg::Canvas c(720, panel_h * static_cast<double>(cases.size()) + 20);
        for (std::size_t k = 0; k < cases.size(); ++k) {
            const auto& cs = cases[k];
            const auto paired = pair_with_truth(cs.steps, cs.truth, cs.ctx);
            double vmax = 1.0, max_err = 0.0, tmin = cs.steps.front().t,
                   tmax = cs.steps.back().t;
            for (std::size_t i = 0; i < paired.size(); ++i) {
                vmax = std::max({vmax, paired[i].first, paired[i].second});
                max_err = std::max(max_err,
                                   std::abs(paired[i].first - paired[i].second));
            }
            const double top = 20.0 + panel_h * static_cast<double>(k);
            svg::AxisMap ax{tmin, std::max(tmax, tmin + 1.0), 0.0, vmax * 1.05,
                            70, 690, top + panel_h - 40, top + 14};
            svg::axes(c, ax, "t (s)", "ml");
            std::vector<std::pair<double, double>> est_pts, truth_pts;
            for (std::size_t i = 0; i < paired.size(); ++i) {
                est_pts.emplace_back(ax.x(cs.steps[i].t), ax.y(paired[i].first));
                truth_pts.emplace_back(ax.x(cs.steps[i].t),
                                       ax.y(paired[i].second));
            }
            c.polyline(truth_pts, "#2ca02c", 1.5);
            c.polyline(est_pts, "#1f77b4", 1.5, "4,3");
            c.text(ax.px0 + 8, top + 26,
                   cs.id + "  max |err| " + svg::num(max_err) + " ml", 12);
        }
        write_text_file(out_dir / "traces.svg", c.finish());
    }
}

}  // namespace bivol
