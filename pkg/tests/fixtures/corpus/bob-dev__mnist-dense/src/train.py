from keras.models import Sequential
from keras.layers import Dense as D, Dropout as Drop

net = Sequential()
net.add(D(128, activation="relu", input_dim=784))
net.add(Drop(0.2))
net.add(D(10, activation="softmax"))
net.compile(loss="categorical_crossentropy", optimizer="rmsprop")
