#include "berglab/singular.hpp"
