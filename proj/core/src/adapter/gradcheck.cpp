#include "splatfeat/adapter/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "splatfeat/adapter/feature_loss.hpp"
#include "splatfeat/adapter/fusion.hpp"
#include "splatfeat/adapter/refine.hpp"
#include "splatfeat/adapter/trainer.hpp"
#include "splatfeat/rng.hpp"

namespace splatfeat::adapter {

namespace {

using Params = FusionParams<double>;
using Map = FeatureMap<double>;

constexpr int kSide = 4;
constexpr int kChannels = 8;

Map random_map(Rng& rng, int channels = kChannels) {
    Map m(kSide, kSide, channels);
    for (double& v : m.data) v = normal01(rng);
    return m;
}

// Flattened view over (maps..., params) so one numeric loop covers all of them.
struct Packing {
    std::vector<Map*> maps;
    Params* params = nullptr;

    std::vector<double> get() const {
        std::vector<double> x;
        for (const Map* m : maps) x.insert(x.end(), m->data.begin(), m->data.end());
        params->for_each([&](const std::string&, const RowMatrix<double>& t) {
            x.insert(x.end(), t.data(), t.data() + t.size());
        });
        return x;
    }
    void set(const std::vector<double>& x) const {
        std::size_t o = 0;
        for (Map* m : maps) {
            std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(o), m->data.size(), m->data.begin());
            o += m->data.size();
        }
        params->for_each([&](const std::string&, RowMatrix<double>& t) {
            std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(o), t.size(), t.data());
            o += static_cast<std::size_t>(t.size());
        });
    }
};

std::vector<double> flatten(const std::vector<RowMatrix<double>>& input_grads, const Params& grad) {
    std::vector<double> x;
    for (const auto& g : input_grads) x.insert(x.end(), g.data(), g.data() + g.size());
    grad.for_each([&](const std::string&, const RowMatrix<double>& t) {
        x.insert(x.end(), t.data(), t.data() + t.size());
    });
    return x;
}

double dot(const RowMatrix<double>& a, const RowMatrix<double>& b) { return (a.array() * b.array()).sum(); }

RowMatrix<double> random_projection(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    RowMatrix<double> r(rows, cols);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = normal01(rng);
    return r;
}

FusionConfig trial_config(int trial) {
    FusionConfig cfg;
    cfg.channels = kChannels;
    cfg.refine_blocks = 2;
    cfg.heads = trial % 2 == 0 ? 1 : 2;
    cfg.per_channel_gate = trial % 3 == 2;
    return cfg;
}

double check(Packing pack, const std::function<double()>& scalar,
             const std::function<std::vector<double>()>& analytic, double step) {
    const std::vector<double> x0 = pack.get();
    const std::vector<double> a = analytic();
    const auto f = [&](const std::vector<double>& x) {
        pack.set(x);
        return scalar();
    };
    const std::vector<double> n = numeric_gradient(f, x0, step);
    pack.set(x0);
    return relative_error(a, n);
}

double trial_refine(Rng& rng, int trial, double step) {
    Params p = Params::random(trial_config(trial), rng(), 0.5);
    Map x = random_map(rng);
    const RowMatrix<double> r = random_projection(rng, x.pixel_count(), kChannels);
    return check(
        {{&x}, &p}, [&] { return dot(refine(x, p).tokens(), r); },
        [&] {
            RefineTape<double> tape;
            refine(x, p, &tape);
            Params g = Params::zeros(p.config);
            const RowMatrix<double> dx = refine_backward(tape, p, r, &g);
            return flatten({dx}, g);
        },
        step);
}

double trial_project(Rng& rng, int trial, double step) {
    Params p = Params::random(trial_config(trial), rng(), 0.5);
    Map x = random_map(rng);
    const RowMatrix<double> r = random_projection(rng, x.pixel_count(), kChannels);
    return check(
        {{&x}, &p}, [&] { return dot(project_features(x, p).tokens(), r); },
        [&] {
            Params g = Params::zeros(p.config);
            const RowMatrix<double> dx = project_backward(x, p, r, &g);
            return flatten({dx}, g);
        },
        step);
}

double trial_feature_loss(Rng& rng, int, double step) {
    std::vector<Map> pred = {random_map(rng), random_map(rng)};
    const std::vector<Map> target = {random_map(rng), random_map(rng)};
    Params none = Params::zeros(FusionConfig{kChannels, 0, 1, false, {}});
    return check(
        {{&pred[0], &pred[1]}, &none}, [&] { return feature_loss<double>(pred, target).value; },
        [&] {
            const auto fl = feature_loss<double>(pred, target);
            return flatten({fl.gradient[0].tokens(), fl.gradient[1].tokens()}, Params::zeros(none.config));
        },
        step);
}

double trial_naive(Rng& rng, int trial, double step) {
    Params p = Params::random(trial_config(trial), rng(), 0.5);
    Map f = random_map(rng), g = random_map(rng);
    const RowMatrix<double> r = random_projection(rng, f.pixel_count(), kChannels);
    return check(
        {{&f, &g}, &p}, [&] { return dot(naive_fuse(f, g, p).tokens(), r); },
        [&] {
            Params gp = Params::zeros(p.config);
            const auto [df, dg] = naive_fuse_backward(f, g, p, r, &gp);
            return flatten({df, dg}, gp);
        },
        step);
}

double trial_adaptive(Rng& rng, int trial, double step) {
    Params p = Params::random(trial_config(trial), rng(), 0.5);
    Map f = random_map(rng), g = random_map(rng);
    const RowMatrix<double> r = random_projection(rng, f.pixel_count(), kChannels);
    return check(
        {{&f, &g}, &p}, [&] { return dot(adaptive_fuse(f, g, p).fused.tokens(), r); },
        [&] {
            FusionTape<double> tape;
            adaptive_fuse(f, g, p, {}, &tape);
            Params gp = Params::zeros(p.config);
            const auto [df, dg] = adaptive_fuse_backward(tape, p, r, &gp);
            return flatten({df, dg}, gp);
        },
        step);
}

double trial_objective(Rng& rng, int trial, double step) {
    static const ToyTask task = make_toy_task(3);
    static const ToyInputs inputs = prepare_toy_inputs(task);
    FusionConfig cfg = trial_config(trial);
    Params p = Params::random(cfg, rng(), 0.5);
    return check(
        {{}, &p}, [&] { return toy_objective(task, inputs, p, 0.05, nullptr).total; },
        [&] {
            Params gp = Params::zeros(p.config);
            toy_objective(task, inputs, p, 0.05, &gp);
            return flatten({}, gp);
        },
        step);
}

}  // namespace

double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    double diff = 0, na = 0, nn = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        na += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nn), std::numeric_limits<double>::min()});
    return std::sqrt(diff) / denom;
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double step) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + step;
        const double up = f(x);
        x[i] = orig - step;
        const double down = f(x);
        x[i] = orig;
        g[i] = (up - down) / (2 * step);
    }
    return g;
}

std::vector<GradcheckResult> run_gradcheck(int trials, std::uint64_t seed, double step) {
    using Trial = double (*)(Rng&, int, double);
    const std::pair<const char*, Trial> ops[] = {
        {"refine", trial_refine},           {"project", trial_project},
        {"feature_loss", trial_feature_loss}, {"naive_fuse", trial_naive},
        {"adaptive_fuse", trial_adaptive},  {"toy_objective", trial_objective},
    };
    std::vector<GradcheckResult> out;
    std::uint64_t stream = 0;
    for (const auto& [name, fn] : ops) {
        GradcheckResult res{name, trials, 0.0};
        for (int t = 0; t < trials; ++t) {
            Rng rng(derive_seed(seed, stream * 1000003u + static_cast<std::uint64_t>(t)));
            res.max_relative_error = std::max(res.max_relative_error, fn(rng, t, step));
        }
        ++stream;
        out.push_back(res);
    }
    return out;
}

}  // namespace splatfeat::adapter
