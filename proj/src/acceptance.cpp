#include "berglab/acceptance.hpp"
