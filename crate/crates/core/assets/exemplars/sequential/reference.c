#include <stdint.h>

uint16_t mul8_pipe(uint8_t a, uint8_t b)
{
    return (uint16_t)a * b;
}
