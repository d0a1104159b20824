#include "celab/returns.hpp"

#include "celab/errors.hpp"
#include "celab/format.hpp"

#include <cmath>
#include <ostream>

namespace celab {

double CriticalNeighborhoods::delta() const { return std::exp(-Delta); }
double CriticalNeighborhoods::delta_prime() const { return std::exp(-DeltaPrime); }
double CriticalNeighborhoods::large_scale() const { return epsilon1 * delta(); }

void CriticalNeighborhoods::validate() const {
    if (!(DeltaPrime > 0.0))
        throw Error("neighbourhoods: DeltaPrime must be positive");
    if (!(DeltaPrime < Delta))
        throw Error("neighbourhoods: DeltaPrime < Delta required");
    if (!(beta > 0.0))
        throw Error("neighbourhoods: beta must be positive");
    if (!(epsilon1 > 0.0 && epsilon1 < 1.0))
        throw Error("neighbourhoods: epsilon1 must lie in (0, 1)");
}

const char* to_string(ReturnKind k) {
    switch (k) {
    case ReturnKind::NonReturn: return "non-return";
    case ReturnKind::ReturnU: return "return-U";
    case ReturnKind::PseudoReturn: return "pseudo-return";
    case ReturnKind::FreeReturn: return "free-return";
    case ReturnKind::InessentialSet: return "inessential";
    case ReturnKind::EssentialSet: return "essential";
    }
    return "unknown";
}

ReturnKind classify_time(const OrbitRecord& orbit, const CriticalNeighborhoods& nbhd, std::size_t n) {
    if (n < 1 || n > orbit.last_index())
        throw WindowBeyondOrbit("classify_time index outside the recorded orbit");
    double az = std::abs(orbit.points[n]);
    if (az <= nbhd.delta()) // closed-ball tie rule
        return ReturnKind::ReturnU;
    if (az <= nbhd.delta_prime())
        return ReturnKind::PseudoReturn;
    return ReturnKind::NonReturn;
}

BoundPeriod bound_period(const OrbitRecord& orbit, std::size_t n, const CriticalNeighborhoods& nbhd, std::size_t j_max) {
    std::size_t avail = orbit.last_index() > n ? orbit.last_index() - n : 0;
    std::size_t jj = std::min(j_max, avail);
    for (std::size_t j = 1; j <= jj; ++j) {
        double ref = std::abs(orbit.points[j]);
        double sep = std::abs(orbit.points[n + j] - orbit.points[j]);
        if (!(sep <= std::exp(-nbhd.beta * static_cast<double>(j)) * ref))
            return BoundPeriod{j - 1, false};
    }
    // binding never failed inside the available window: a measured prefix only
    return BoundPeriod{jj, true};
}

int r_index(double dist) {
    if (!(dist > 0.0 && dist < 1.0))
        throw Error("r_index requires 0 < dist < 1");
    return static_cast<int>(std::ceil(-std::log(dist) - 0.5));
}

std::vector<ReturnEvent> timeline(const OrbitRecord& orbit, const CriticalNeighborhoods& nbhd, std::size_t n_max) {
    std::vector<ReturnEvent> events;
    const double delta = nbhd.delta();
    const std::size_t scan_end = std::min(n_max, orbit.last_index());

    auto next_return = [&](std::size_t from) -> std::size_t {
        for (std::size_t k = from; k <= scan_end; ++k)
            if (std::abs(orbit.points[k]) <= delta)
                return k;
        return 0; // 0 is never a return index
    };

    std::size_t nu = next_return(1);
    while (nu != 0) {
        auto bp = bound_period(orbit, nu, nbhd, orbit.last_index() - nu);
        ReturnEvent ev;
        ev.n = nu;
        ev.kind = ReturnKind::FreeReturn;
        ev.r = r_index(std::abs(orbit.points[nu]));
        ev.p = bp.p;
        // depth and derivative exponent at the return time itself
        ev.alpha_n = -std::log(std::abs(orbit.points[nu])) / static_cast<double>(nu);
        ev.gamma_n = orbit.log_deriv[nu] / static_cast<double>(nu);
        ev.open_ended = bp.truncated;

        std::size_t after = nu + bp.p + 1;
        std::size_t next = (after <= scan_end && !bp.truncated) ? next_return(after) : 0;
        if (next != 0) {
            ev.ell = next - after;
        } else {
            // pseudo-return excursions and quiet time to the window edge are
            // free time; the remainder is reported, never guessed
            ev.ell = (n_max > nu + bp.p) ? n_max - nu - bp.p - 1 : 0;
            ev.open_ended = true;
        }
        events.push_back(ev);
        nu = next;
    }
    return events;
}

void write_timeline_csv(std::ostream& os, const std::vector<ReturnEvent>& events) {
    os << "n,kind,r,p,ell,alpha_n,gamma_n\n";
    for (const auto& e : events) {
        os << e.n << ',' << to_string(e.kind) << ',' << e.r << ',' << e.p << ',' << e.ell
           << ',' << fmt_double(e.alpha_n) << ',' << fmt_double(e.gamma_n) << '\n';
    }
}

BoundPeriodPrediction bound_period_prediction(int r, double gamma_p, double alpha_p1, double beta, double eta, int d) {
    double rate = gamma_p + alpha_p1 + beta;
    if (!(rate > 0.0))
        throw Error("bound period prediction requires gamma + alpha + beta > 0");
    double dr = static_cast<double>(d) * static_cast<double>(r);
    BoundPeriodPrediction out;
    out.p_lower = (1.0 - eta) * dr / rate;
    out.p_upper = (1.0 + eta) * dr / rate;
    out.expansion_lower =
        std::exp((1.0 - eta) * static_cast<double>(r) * (gamma_p - (d - 1) * (alpha_p1 + beta)) / rate);
    return out;
}

} // namespace celab
