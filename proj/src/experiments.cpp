#include "berglab/experiments.hpp"
