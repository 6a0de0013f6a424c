#include <stdint.h>

/* Saturates a 16-bit intermediate to 8 bits. */
uint8_t clamp8(uint16_t v)
{
    return v > 255 ? 255 : (uint8_t)v;
}

uint8_t scale_a(uint8_t x)
{
    return clamp8((uint16_t)x * 3);
}

uint8_t scale_b(uint8_t x)
{
    return clamp8((uint16_t)x + 100);
}

uint8_t diamond_top(uint8_t x, uint8_t y)
{
    return scale_a(x) ^ scale_b(y);
}
