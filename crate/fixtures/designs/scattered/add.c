#include <stdint.h>

uint8_t add_sat(uint8_t a, uint8_t b)
{
    uint16_t s = (uint16_t)a + b;
    return s > 255 ? 255 : (uint8_t)s;
}
