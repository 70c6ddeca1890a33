#include "freqctl/network.hpp"

#include <array>

namespace freqctl {

namespace {

struct Branch {
  int from;
  int to;
  double reactance;  // p.u. on the 100 MVA system base
};

// Branch list of the 39-bus New England system; mirrors data/ieee39.json.
constexpr std::array<Branch, 46> kBranches{{
    {1, 2, 0.0411},
    {1, 39, 0.025},
    {2, 3, 0.0151},
    {2, 25, 0.0086},
    {2, 30, 0.0181},
    {3, 4, 0.0213},
    {3, 18, 0.0133},
    {4, 5, 0.0128},
    {4, 14, 0.0129},
    {5, 6, 0.0026},
    {5, 8, 0.0112},
    {6, 7, 0.0092},
    {6, 11, 0.0082},
    {6, 31, 0.025},
    {7, 8, 0.0046},
    {8, 9, 0.0363},
    {9, 39, 0.025},
    {10, 11, 0.0043},
    {10, 13, 0.0043},
    {10, 32, 0.02},
    {12, 11, 0.0435},
    {12, 13, 0.0435},
    {13, 14, 0.0101},
    {14, 15, 0.0217},
    {15, 16, 0.0094},
    {16, 17, 0.0089},
    {16, 19, 0.0195},
    {16, 21, 0.0135},
    {16, 24, 0.0059},
    {17, 18, 0.0082},
    {17, 27, 0.0173},
    {19, 20, 0.0138},
    {19, 33, 0.0142},
    {20, 34, 0.018},
    {21, 22, 0.014},
    {22, 23, 0.0096},
    {22, 35, 0.0143},
    {23, 24, 0.035},
    {23, 36, 0.0272},
    {25, 26, 0.0323},
    {25, 37, 0.0232},
    {26, 27, 0.0147},
    {26, 28, 0.0474},
    {26, 29, 0.0625},
    {28, 29, 0.0151},
    {29, 38, 0.0156}
}};

// Inertia constants H (s) of the ten machines at buses 30..39.
constexpr std::array<double, 10> kGeneratorH{42.0, 30.3, 35.8, 28.6, 26.0,
                                             34.8, 26.4, 24.3, 34.5, 500.0};

constexpr double kSusceptanceScale = 5.0;
constexpr double kLoadBusInertia = 1.0;
constexpr double kGeneratorDamping = 150.0;
constexpr double kLoadBusDamping = 100.0;

}  // namespace

NetworkModel ieee39() {
  constexpr int n = 39;
  std::vector<Edge> edges;
  Vector b(static_cast<Eigen::Index>(kBranches.size()));
  for (std::size_t e = 0; e < kBranches.size(); ++e) {
    edges.push_back({static_cast<std::size_t>(kBranches[e].from - 1),
                     static_cast<std::size_t>(kBranches[e].to - 1)});
    b[static_cast<Eigen::Index>(e)] = kSusceptanceScale / kBranches[e].reactance;
  }
  Vector m(n), d(n);
  for (int i = 0; i < n; ++i) {
    const bool generator = i + 1 >= 30;
    m[i] = generator ? 2.0 * kGeneratorH[static_cast<std::size_t>(i + 1 - 30)] : kLoadBusInertia;
    d[i] = generator ? kGeneratorDamping : kLoadBusDamping;
  }
  return NetworkModel(n, std::move(edges), std::move(m), std::move(d), std::move(b));
}

}  // namespace freqctl
