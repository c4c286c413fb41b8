var parts = ['a/b', /x\/y/, 'c']; // mixed array
print(parts.length);
