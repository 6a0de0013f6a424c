#include <stdint.h>

uint8_t sat_add8(uint8_t a, uint8_t b)
{
    uint16_t sum = (uint16_t)a + b;
    return sum > 0xFF ? 0xFF : (uint8_t)sum;
}
