#pragma once

#define BACE_VERSION "0.1.0"
