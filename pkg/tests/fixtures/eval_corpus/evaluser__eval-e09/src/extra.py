from keras.models import Sequential
from keras.layers import Dense

model = Sequential()
model.add(Dense(32, activation="relu", input_shape=(6,)))
model.add(Dense(1))
model.compile(optimizer="adam", loss="mean_absolute_error")
