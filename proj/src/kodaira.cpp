#include "berglab/kodaira.hpp"
