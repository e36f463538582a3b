// Writes the committed golden fixtures. Run from the repository root:
//   fixturegen [output-directory]
#include <cstdio>
#include <string>

#include "sensormesh.h"

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "fixtures";
  sm_trace* trace = nullptr;
  if (sm_trace_reference(&trace) != SM_OK) {
    std::fprintf(stderr, "error: %s\n", sm_last_error());
    return 2;
  }
  const std::string path = dir + "/temperature_anomaly.csv";
  const sm_status status = sm_trace_save(trace, path.c_str());
  sm_trace_free(trace);
  if (status != SM_OK) {
    std::fprintf(stderr, "error: %s\n", sm_last_error());
    return 2;
  }
  std::printf("wrote %s\n", path.c_str());
  return 0;
}
