#pragma once

#define ABON_VERSION_MAJOR 0
#define ABON_VERSION_MINOR 1
#define ABON_VERSION_PATCH 0
#define ABON_VERSION "0.1.0"
