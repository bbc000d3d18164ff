#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "twohop/kernels/kernels.hpp"
#include "twohop/kernels/variants.hpp"

using namespace twohop;

namespace {

std::vector<float> random_vec(std::mt19937_64& rng, std::size_t n, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> d(lo, hi);
    std::vector<float> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

std::vector<double> widen(const std::vector<float>& v) {
    return std::vector<double>(v.begin(), v.end());
}

void check_close(const std::vector<float>& got, const std::vector<double>& want,
                 double rtol, double atol) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double tol = atol + rtol * std::fabs(want[i]);
        INFO("index ", i, " got ", got[i], " want ", want[i]);
        CHECK(std::fabs((double)got[i] - want[i]) <= tol);
    }
}

std::vector<kernels::Backend> supported_backends() {
    std::vector<kernels::Backend> out{kernels::Backend::scalar};
    if (kernels::backend_supported(kernels::Backend::avx2)) out.push_back(kernels::Backend::avx2);
    if (kernels::backend_supported(kernels::Backend::avx512)) out.push_back(kernels::Backend::avx512);
    return out;
}

struct BackendGuard {
    kernels::Backend saved;
    BackendGuard() : saved(kernels::active_backend()) {}
    ~BackendGuard() { kernels::set_backend(saved); }
};

// Sizes chosen to hit every tail path: sub-vector, exact multiples, ragged.
const int kGemmSizes[][3] = {
    {1, 1, 1},  {1, 2, 3},   {3, 5, 7},    {4, 2, 16},  {5, 3, 17},
    {8, 8, 8},  {13, 31, 19}, {16, 64, 32}, {7, 65, 33}, {12, 130, 128},
    {33, 17, 5}, {2, 512, 128}, {40, 128, 512},
};

const int kVecSizes[] = {1, 2, 7, 8, 9, 15, 16, 17, 31, 32, 100, 128, 513};

}  // namespace

TEST_CASE("gemm variants match the double reference") {
    BackendGuard guard;
    std::mt19937_64 rng(0xC0FFEE);
    for (const auto& sz : kGemmSizes) {
        const int m = sz[0], n = sz[1], k = sz[2];
        const auto a = random_vec(rng, (std::size_t)m * k);
        const auto bt = random_vec(rng, (std::size_t)n * k);   // B stored [n x k]
        const auto bn = random_vec(rng, (std::size_t)k * n);   // B stored [k x n]
        const auto at = random_vec(rng, (std::size_t)k * m);   // A stored [k x m]
        const auto c0 = random_vec(rng, (std::size_t)m * n);

        for (bool accumulate : {false, true}) {
            std::vector<double> want_nt = widen(c0), want_nn = widen(c0), want_tn = widen(c0);
            kernels::ref::gemm_nt(widen(a).data(), widen(bt).data(), want_nt.data(), m, n, k, accumulate);
            kernels::ref::gemm_nn(widen(a).data(), widen(bn).data(), want_nn.data(), m, n, k, accumulate);
            kernels::ref::gemm_tn(widen(at).data(), widen(bn).data(), want_tn.data(), m, n, k, accumulate);

            for (auto backend : supported_backends()) {
                CAPTURE(kernels::backend_name(backend));
                CAPTURE(m); CAPTURE(n); CAPTURE(k); CAPTURE(accumulate);
                kernels::set_backend(backend);

                std::vector<float> got = c0;
                kernels::gemm_nt(a.data(), bt.data(), got.data(), m, n, k, accumulate);
                check_close(got, want_nt, 1e-4, 1e-4);

                got = c0;
                kernels::gemm_nn(a.data(), bn.data(), got.data(), m, n, k, accumulate);
                check_close(got, want_nn, 1e-4, 1e-4);

                got = c0;
                kernels::gemm_tn(at.data(), bn.data(), got.data(), m, n, k, accumulate);
                check_close(got, want_tn, 1e-4, 1e-4);
            }
        }
    }
}

TEST_CASE("elementwise variants match the double reference") {
    BackendGuard guard;
    std::mt19937_64 rng(0xBEEF);
    for (int n : kVecSizes) {
        const auto a = random_vec(rng, n, -4.0f, 4.0f);
        const auto b = random_vec(rng, n, -4.0f, 4.0f);
        const auto g = random_vec(rng, n, 0.5f, 1.5f);

        for (auto backend : supported_backends()) {
            CAPTURE(kernels::backend_name(backend));
            CAPTURE(n);
            kernels::set_backend(backend);

            CHECK(kernels::dot(a.data(), b.data(), n) ==
                  doctest::Approx(kernels::ref::dot(widen(a).data(), widen(b).data(), n))
                      .epsilon(1e-4));

            std::vector<float> y = b;
            kernels::axpy(0.37f, a.data(), y.data(), n);
            std::vector<double> wy = widen(b);
            kernels::ref::axpy(0.37, widen(a).data(), wy.data(), n);
            check_close(y, wy, 1e-5, 1e-6);

            y = a;
            kernels::scale(y.data(), -1.25f, n);
            wy = widen(a);
            kernels::ref::scale(wy.data(), -1.25, n);
            check_close(y, wy, 1e-6, 1e-7);

            y.assign(n, 0.0f);
            kernels::add(a.data(), b.data(), y.data(), n);
            wy.assign(n, 0.0);
            kernels::ref::add(widen(a).data(), widen(b).data(), wy.data(), n);
            check_close(y, wy, 1e-6, 1e-7);

            y.assign(n, 0.0f);
            kernels::silu(a.data(), y.data(), n);
            wy.assign(n, 0.0);
            kernels::ref::silu(widen(a).data(), wy.data(), n);
            check_close(y, wy, 1e-5, 1e-6);

            y = b;
            kernels::silu_backward(a.data(), g.data(), y.data(), n);
            wy = widen(b);
            kernels::ref::silu_backward(widen(a).data(), widen(g).data(), wy.data(), n);
            check_close(y, wy, 1e-5, 1e-6);
        }
    }
}

TEST_CASE("softmax and logsumexp variants match the double reference") {
    BackendGuard guard;
    std::mt19937_64 rng(0xFACE);
    for (int n : kVecSizes) {
        // Wide logit range exercises the max-shift.
        const auto x = random_vec(rng, n, -30.0f, 30.0f);

        std::vector<double> want = widen(x);
        const double want_lse = kernels::ref::softmax_inplace(want.data(), n);

        for (auto backend : supported_backends()) {
            CAPTURE(kernels::backend_name(backend));
            CAPTURE(n);
            kernels::set_backend(backend);

            std::vector<float> got = x;
            const float lse = kernels::softmax_inplace(got.data(), n);
            CHECK(lse == doctest::Approx(want_lse).epsilon(1e-5));
            check_close(got, want, 1e-4, 1e-7);

            float sum = 0.0f;
            for (float p : got) sum += p;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));

            CHECK(kernels::logsumexp(x.data(), n) == doctest::Approx(want_lse).epsilon(1e-5));
        }
    }
}

TEST_CASE("rmsnorm variants match the double reference") {
    BackendGuard guard;
    std::mt19937_64 rng(0xDADA);
    for (int n : kVecSizes) {
        const auto x = random_vec(rng, n, -2.0f, 2.0f);
        const auto gain = random_vec(rng, n, 0.5f, 1.5f);
        const auto dy = random_vec(rng, n);
        const auto dx0 = random_vec(rng, n);
        const auto dg0 = random_vec(rng, n);
        const float eps = 1e-5f;

        std::vector<double> want_y(n);
        const double want_inv =
            kernels::ref::rmsnorm(widen(x).data(), widen(gain).data(), want_y.data(), n, (double)eps);
        std::vector<double> want_dx = widen(dx0), want_dg = widen(dg0);
        kernels::ref::rmsnorm_backward(widen(x).data(), widen(gain).data(), widen(dy).data(),
                                       want_inv, want_dx.data(), want_dg.data(), n);

        for (auto backend : supported_backends()) {
            CAPTURE(kernels::backend_name(backend));
            CAPTURE(n);
            kernels::set_backend(backend);

            std::vector<float> y(n);
            const float inv = kernels::rmsnorm(x.data(), gain.data(), y.data(), n, eps);
            CHECK(inv == doctest::Approx(want_inv).epsilon(1e-5));
            check_close(y, want_y, 1e-5, 1e-6);

            std::vector<float> dx = dx0, dg = dg0;
            kernels::rmsnorm_backward(x.data(), gain.data(), dy.data(), inv, dx.data(), dg.data(), n);
            check_close(dx, want_dx, 1e-4, 1e-5);
            check_close(dg, want_dg, 1e-4, 1e-5);
        }
    }
}

// The backward kernels are hand-derived; pin them against central differences
// on the double path.
TEST_CASE("silu_backward matches finite differences") {
    std::mt19937_64 rng(7);
    const int n = 23;
    std::vector<double> x = widen(random_vec(rng, n, -3.0f, 3.0f));
    std::vector<double> w = widen(random_vec(rng, n));

    std::vector<double> dx(n, 0.0);
    kernels::ref::silu_backward(x.data(), w.data(), dx.data(), n);

    const double h = 1e-6;
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        auto f = [&](double xi) {
            std::vector<double> xs = x;
            xs[i] = xi;
            kernels::ref::silu(xs.data(), y.data(), n);
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += w[j] * y[j];
            return s;
        };
        const double fd = (f(x[i] + h) - f(x[i] - h)) / (2 * h);
        CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("rmsnorm_backward matches finite differences") {
    std::mt19937_64 rng(11);
    const int n = 17;
    std::vector<double> x = widen(random_vec(rng, n, -2.0f, 2.0f));
    std::vector<double> gain = widen(random_vec(rng, n, 0.5f, 1.5f));
    std::vector<double> w = widen(random_vec(rng, n));
    const double eps = 1e-5;

    std::vector<double> y(n);
    const double inv = kernels::ref::rmsnorm(x.data(), gain.data(), y.data(), n, eps);
    std::vector<double> dx(n, 0.0), dg(n, 0.0);
    kernels::ref::rmsnorm_backward(x.data(), gain.data(), w.data(), inv, dx.data(), dg.data(), n);

    auto loss = [&](const std::vector<double>& xs, const std::vector<double>& gs) {
        kernels::ref::rmsnorm(xs.data(), gs.data(), y.data(), n, eps);
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += w[j] * y[j];
        return s;
    };

    const double h = 1e-6;
    for (int i = 0; i < n; ++i) {
        std::vector<double> xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fd = (loss(xp, gain) - loss(xm, gain)) / (2 * h);
        CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-5));

        std::vector<double> gp = gain, gm = gain;
        gp[i] += h;
        gm[i] -= h;
        const double fdg = (loss(x, gp) - loss(x, gm)) / (2 * h);
        CHECK(dg[i] == doctest::Approx(fdg).epsilon(1e-5));
    }
}

TEST_CASE("backend selection") {
    BackendGuard guard;
    CHECK(kernels::backend_supported(kernels::Backend::scalar));
    kernels::set_backend(kernels::Backend::scalar);
    CHECK(kernels::active_backend() == kernels::Backend::scalar);
    CHECK(kernels::backend_name(kernels::Backend::avx512) == std::string("avx512"));
    if (!kernels::backend_supported(kernels::Backend::avx512)) {
        CHECK_THROWS(kernels::set_backend(kernels::Backend::avx512));
    }
}
