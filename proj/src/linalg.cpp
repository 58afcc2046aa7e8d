#include "subseg/linalg.hpp"

namespace subseg {

const char* backend_description() { return kern::isa_name(kern::active_isa()); }

}  // namespace subseg
