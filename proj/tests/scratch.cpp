#include <cstdio>
#include <cmath>
#include <vector>
#include "raindoa/mtl_net.hpp"
#include "raindoa/rng.hpp"
#include "raindoa/parallel.hpp"

using namespace raindoa;

int main()
{
    set_num_workers(2);
    // tiny double net
    net::NetConfig cfg;
    cfg.input_size = 6; cfg.width = 4; cfg.blocks = 2; cfg.hidden = 16;
    cfg.grid_size = 11; cfg.rain_classes = 3;
    net::Network<double> nw(cfg);
    nw.init_params(99);
    // nonzero s values to exercise the regularizers
    nw.find_parameter("s_doa")->v[0] = 0.3;
    nw.find_parameter("s_rain")->v[0] = -0.2;

    const std::size_t B = 3;
    RandomStream rng(5);
    std::vector<double> x(B * 3 * 36);
    for (auto &v : x) v = rng.normal();
    std::vector<std::uint8_t> masks(B * cfg.grid_size, 0);
    std::vector<std::uint8_t> labels(B);
    for (std::size_t b = 0; b < B; ++b) {
        masks[b * cfg.grid_size + (b * 3) % cfg.grid_size] = 1;
        masks[b * cfg.grid_size + (b * 3 + 5) % cfg.grid_size] = 1;
        labels[b] = std::uint8_t(b % cfg.rain_classes);
    }

    auto grads = nw.make_gradient_buffers();
    auto losses = nw.forward_backward(x.data(), B, masks.data(), labels.data(),
                                      net::WeightingMode::Uncertainty, 1.0, grads);
    std::printf("loss total=%.6f doa=%.6f rain=%.6f\n", losses.total, losses.doa_bce, losses.rain_ce);

    // FD check over all parameters
    double worst = 0.0; std::string worst_name; std::size_t checked = 0;
    for (std::size_t t = 0; t < nw.parameters().size(); ++t) {
        auto &p = nw.parameters()[t];
        for (std::size_t i = 0; i < p.v.size(); ++i) {
            const double orig = p.v[i];
            const double h = 1e-5 * std::max(1.0, std::abs(orig));
            p.v[i] = orig + h;
            const double lp = nw.compute_loss(x.data(), B, masks.data(), labels.data(),
                                              net::WeightingMode::Uncertainty, 1.0).total;
            p.v[i] = orig - h;
            const double lm = nw.compute_loss(x.data(), B, masks.data(), labels.data(),
                                              net::WeightingMode::Uncertainty, 1.0).total;
            p.v[i] = orig;
            const double fd = (lp - lm) / (2 * h);
            const double an = grads[t].v[i];
            const double rel = std::abs(fd - an) / std::max({1e-8, std::abs(fd), std::abs(an)});
            ++checked;
            if (rel > worst && (std::abs(fd) > 1e-10 || std::abs(an) > 1e-10)) { worst = rel; worst_name = p.name; }
        }
    }
    std::printf("gradcheck: %zu params, worst rel err %.3e (%s)\n", checked, worst, worst_name.c_str());

    // eval determinism
    std::vector<double> dl1(B * cfg.grid_size), rl1(B * cfg.rain_classes);
    std::vector<double> dl2 = dl1, rl2 = rl1;
    nw.forward(x.data(), B, false, dl1.data(), rl1.data());
    nw.forward(x.data(), B, false, dl2.data(), rl2.data());
    bool same = dl1 == dl2 && rl1 == rl2;
    std::printf("eval determinism: %s\n", same ? "ok" : "FAIL");

    // quick descent check: 30 Adam-free SGD steps on one batch should reduce loss
    {
        net::Network<float> nf(cfg);
        nf.init_params(3);
        std::vector<float> xf(x.begin(), x.end());
        auto g2 = nf.make_gradient_buffers();
        float first = 0, last = 0;
        for (int it = 0; it < 60; ++it) {
            auto L = nf.forward_backward(xf.data(), B, masks.data(), labels.data(),
                                         net::WeightingMode::Uncertainty, 1.0, g2);
            if (it == 0) first = L.total;
            last = L.total;
            for (std::size_t t = 0; t < nf.parameters().size(); ++t)
                for (std::size_t i = 0; i < g2[t].v.size(); ++i)
                    nf.parameters()[t].v[i] -= 0.01f * g2[t].v[i];
        }
        std::printf("sgd descent: first=%.4f last=%.4f %s\n", first, last, last < first ? "ok" : "FAIL");
    }
    return 0;
}
