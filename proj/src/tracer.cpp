#include "relief/tracer.hpp"

#include <cmath>
#include <stdexcept>

namespace relief {

bool clip_to_bounding_sphere(const Ray& ray, double r, double& t0, double& t1) {
    const double b = ray.origin.dot(ray.dir);
    const double c = ray.origin.squaredNorm() - r * r;
    const double disc = b * b - c;
    if (disc <= 0.0) return false;
    const double s = std::sqrt(disc);
    t0 = std::max(t0, -b - s);
    t1 = std::min(t1, -b + s);
    return t0 < t1;
}

namespace {

struct RayState {
    double t = 0.0;
    double t_stop = 0.0;
    double prev_t = 0.0;
    double prev_f = 0.0;
    bool has_prev = false;
    // secant bracket, fa > 0 at ta, fb < 0 at tb
    double ta = 0.0, fa = 0.0, tb = 0.0, fb = 0.0;
    int secant_left = 0;
    // polish candidate after an early |f| < tol stop
    double t_polish = 0.0;
    double f_at_stop = 0.0;
    int iterations = 0;
    enum { kMarching, kSecant, kPolish, kDone } phase = kMarching;
    Hit result;
};

}  // namespace

std::vector<Hit> sphere_trace(const BatchSdf& sdf, const std::vector<Ray>& rays,
                              const std::vector<std::pair<double, double>>& bounds, const TracerConfig& cfg) {
    if (cfg.t_min >= cfg.t_max) throw std::invalid_argument("sphere_trace: t_min must be below t_max");
    if (!bounds.empty() && bounds.size() != rays.size())
        throw std::invalid_argument("sphere_trace: bounds size mismatch");

    std::vector<RayState> st(rays.size());
    std::vector<int> active;
    active.reserve(rays.size());
    for (size_t i = 0; i < rays.size(); ++i) {
        st[i].t = bounds.empty() ? cfg.t_min : bounds[i].first;
        st[i].t_stop = bounds.empty() ? cfg.t_max : bounds[i].second;
        st[i].phase = RayState::kMarching;
        if (st[i].t >= st[i].t_stop) {
            st[i].result.t = st[i].t;
            st[i].result.x = rays[i].origin + st[i].t * rays[i].dir;
            st[i].phase = RayState::kDone;
            continue;
        }
        active.push_back(static_cast<int>(i));
    }

    Mat pts;
    while (!active.empty()) {
        pts.resize(3, static_cast<Eigen::Index>(active.size()));
        for (size_t k = 0; k < active.size(); ++k) {
            const RayState& s = st[active[k]];
            const Ray& r = rays[active[k]];
            double t = s.t;
            if (s.phase == RayState::kSecant) t = s.ta - s.fa * (s.tb - s.ta) / (s.fb - s.fa);
            if (s.phase == RayState::kPolish) t = s.t_polish;
            pts.col(static_cast<Eigen::Index>(k)) = r.origin + t * r.dir;
        }
        const Eigen::RowVectorXd f = sdf(pts);

        std::vector<int> next;
        next.reserve(active.size());
        for (size_t k = 0; k < active.size(); ++k) {
            const int i = active[k];
            RayState& s = st[i];
            const Ray& r = rays[i];
            const double fv = f(static_cast<Eigen::Index>(k));
            ++s.iterations;

            if (s.phase == RayState::kPolish) {
                // keep whichever sample is closer to the zero crossing
                const double t_final = std::abs(fv) <= std::abs(s.f_at_stop) ? s.t_polish : s.t;
                s.result.hit = s.result.converged = true;
                s.result.t = t_final;
                s.result.x = r.origin + t_final * r.dir;
                s.phase = RayState::kDone;
                continue;
            }

            if (s.phase == RayState::kSecant) {
                const double t_new = s.ta - s.fa * (s.tb - s.ta) / (s.fb - s.fa);
                if (std::abs(fv) < cfg.tol || s.secant_left <= 1) {
                    s.result.hit = s.result.converged = std::abs(fv) < cfg.tol;
                    s.result.t = t_new;
                    s.result.x = r.origin + t_new * r.dir;
                    s.phase = RayState::kDone;
                } else {
                    if (fv > 0.0) {
                        s.ta = t_new;
                        s.fa = fv;
                    } else {
                        s.tb = t_new;
                        s.fb = fv;
                    }
                    --s.secant_left;
                    next.push_back(i);
                }
                continue;
            }

            if (std::abs(fv) < cfg.tol) {
                // Converged by tolerance. A grazing ray can still sit a few
                // tolerances short of the true crossing, so extrapolate the
                // local secant once and verify.
                if (s.has_prev && std::abs(fv - s.prev_f) > 0.0) {
                    const double t_cand = s.t - fv * (s.t - s.prev_t) / (fv - s.prev_f);
                    if (std::isfinite(t_cand) && t_cand > s.prev_t && t_cand < s.t_stop &&
                        std::abs(t_cand - s.t) > 1e-15) {
                        s.t_polish = t_cand;
                        s.f_at_stop = fv;
                        s.phase = RayState::kPolish;
                        next.push_back(i);
                        continue;
                    }
                }
                s.result.hit = s.result.converged = true;
                s.result.t = s.t;
                s.result.x = r.origin + s.t * r.dir;
                s.phase = RayState::kDone;
            } else if (fv < 0.0 && s.has_prev) {
                // overshot into the shell: bracket [prev_t, t] and polish
                s.ta = s.prev_t;
                s.fa = s.prev_f;
                s.tb = s.t;
                s.fb = fv;
                s.secant_left = cfg.secant_steps;
                s.phase = RayState::kSecant;
                next.push_back(i);
            } else if (fv < 0.0) {
                // started inside; no bracket to refine
                s.result.hit = false;
                s.result.converged = false;
                s.result.t = s.t;
                s.result.x = r.origin + s.t * r.dir;
                s.phase = RayState::kDone;
            } else {
                s.prev_t = s.t;
                s.prev_f = fv;
                s.has_prev = true;
                s.t += cfg.damping * fv;
                if (s.t > s.t_stop || s.iterations >= cfg.max_iters) {
                    s.result.hit = false;
                    s.result.converged = false;
                    s.result.t = s.t;
                    s.result.x = r.origin + s.t * r.dir;
                    s.phase = RayState::kDone;
                } else {
                    next.push_back(i);
                }
            }
        }
        active.swap(next);
    }

    std::vector<Hit> hits(rays.size());
    for (size_t i = 0; i < rays.size(); ++i) {
        hits[i] = st[i].result;
        hits[i].iterations = st[i].iterations;
    }
    return hits;
}

std::vector<Hit> sphere_trace(const BatchSdf& sdf, const std::vector<Ray>& rays, const TracerConfig& cfg) {
    return sphere_trace(sdf, rays, {}, cfg);
}

Hit sphere_trace(const BatchSdf& sdf, const Ray& ray, const TracerConfig& cfg) {
    return sphere_trace(sdf, std::vector<Ray>{ray}, {}, cfg)[0];
}

}  // namespace relief
