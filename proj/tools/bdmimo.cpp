#include <exception>
#include <iostream>

#include "bdmimo/experiment_spec.hpp"

int main(int argc, char** argv) {
  try {
    const bdmimo::ExperimentSpec spec = bdmimo::parse_spec(argc, argv);
    const bdmimo::SweepResult result = bdmimo::run_experiment(spec);
    return bdmimo::emit_results(result, spec);
  } catch (const bdmimo::HelpRequested&) {
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
