#include "avantsatie/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ostream>
#include <thread>

#include "avantsatie/csv.hpp"
#include "avantsatie/errors.hpp"

namespace avantsatie {

void Envelope::validate() const
{
    if (!(step_deg > 0.0))
        throw ContractViolation("sweep step must be > 0");
    if (!(yaw_max_deg >= yaw_min_deg) || !(pitch_max_deg >= pitch_min_deg))
        throw ContractViolation("sweep envelope bounds are inverted");
}

namespace {

std::vector<double> range(double lo, double hi, double step)
{
    std::vector<double> out;
    // Index-based so that a 1 deg sweep hits the upper bound exactly.
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i)
        out.push_back(lo + static_cast<double>(i) * step);
    return out;
}

} // namespace

std::vector<double> Envelope::yaws() const { return range(yaw_min_deg, yaw_max_deg, step_deg); }
std::vector<double> Envelope::pitches() const { return range(pitch_min_deg, pitch_max_deg, step_deg); }

std::vector<SweepRow> run_sweep(const KinematicChain& chain, const std::vector<ExpressionPosture>& expressions,
                                const Envelope& envelope, const ErikSettings& settings, std::size_t threads)
{
    envelope.validate();
    settings.validate();
    const auto yaws = envelope.yaws();
    const auto pitches = envelope.pitches();
    const std::size_t per_expression = yaws.size() * pitches.size();
    std::vector<SweepRow> rows(expressions.size() * per_expression);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            const std::size_t e = i / per_expression, cell = i % per_expression;
            SweepRow& r = rows[i];
            r.expression = expressions[e].name;
            r.pitch_deg = pitches[cell / yaws.size()];
            r.yaw_deg = yaws[cell % yaws.size()];
            const Vec3 dir = direction_from_yaw_pitch(deg_to_rad(r.yaw_deg), deg_to_rad(r.pitch_deg));
            const auto t0 = std::chrono::steady_clock::now();
            const SolveResult s = erik_solve(chain, expressions[e], Direction{dir}, settings);
            const auto t1 = std::chrono::steady_clock::now();
            r.report = s.report;
            r.within_limits = within_limits(chain, s.posture);
            r.solve_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
        }
    };
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(rows.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& th : pool)
        th.join();
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
    out << "expression,yaw_deg,pitch_deg,error_deg,divergence_deg,iterations,converged,solve_us\n";
    for (const auto& r : rows)
        out << csv_row({r.expression, format_number(r.yaw_deg), format_number(r.pitch_deg),
                        format_fixed(rad_to_deg(r.report.angle_error), 6),
                        format_fixed(rad_to_deg(r.report.posture_divergence), 6),
                        std::to_string(r.report.iterations), r.report.converged ? "1" : "0",
                        format_fixed(r.solve_us, 2)})
            << '\n';
}

} // namespace avantsatie
