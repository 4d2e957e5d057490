// Four-sensor network: enumerate detectable structures, then estimate the
// faults behind one residual vector.

#include <leakdet/leakdet.hpp>

#include <iomanip>
#include <iostream>

int main() {
  using namespace leakdet;
  const Topology t = Topology::create({"0",
                                       {"0", "1", "2", "3", "4"},
                                       {{"1", "0", "1"}, {"2", "1", "2"}, {"3", "2", "3"}, {"4", "1", "4"}},
                                       {}});

  const DetectableCatalog catalog = enumerate_detectable(t);
  std::cout << "candidates:";
  for (const auto& e : catalog.candidates) std::cout << ' ' << e.label;
  std::cout << "\ndetectable " << catalog.detectable_count << ", undetectable " << catalog.undetectable_count << "\n\n";

  // Sensor 3 over-reads by 2 while nothing else is wrong.
  const auto residuals = ResidualVector::from_values(t, {0.0, 0.0, 2.0, 0.0}, "example");
  const EstimationReport report = estimate_faults(t, catalog, residuals);
  std::cout << "valid structures " << report.valid << " of " << report.solved << ", minimal l1 " << report.best_l1()
            << "\n";
  for (std::size_t u = 0; u < report.unknowns.size(); ++u)
    std::cout << std::setw(4) << report.unknowns[u].label << "  [" << report.envelope[u].min << ", "
              << report.envelope[u].max << "]\n";
}
